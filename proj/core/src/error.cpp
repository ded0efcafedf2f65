#include "hqml/error.hpp"

namespace hqml {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Size: return "size";
    case ErrorKind::Wire: return "wire";
    case ErrorKind::Param: return "param";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Label: return "label";
    case ErrorKind::Vocab: return "vocab";
    case ErrorKind::Input: return "input";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Differentiation: return "differentiation";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::DegenerateData: return "degenerate_data";
    case ErrorKind::Config: return "config";
    case ErrorKind::Normalization: return "normalization";
    case ErrorKind::Split: return "split";
    case ErrorKind::Comparability: return "comparability";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace hqml
