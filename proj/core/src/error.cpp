#include "hcshape/error.hpp"

namespace hcshape {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::WrongMagic: return "WrongMagic";
    case Errc::Truncated: return "Truncated";
    case Errc::BadDigit: return "BadDigit";
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::TooLarge: return "TooLarge";
    case Errc::TooFew: return "TooFew";
    case Errc::Empty: return "Empty";
    case Errc::MissingBlock: return "MissingBlock";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooFewFolds: return "TooFewFolds";
    case Errc::MissingData: return "MissingData";
    case Errc::CacheCorrupt: return "CacheCorrupt";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace hcshape
