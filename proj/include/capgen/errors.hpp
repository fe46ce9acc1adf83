#pragma once

#include <stdexcept>
#include <string>

namespace capgen {

// Base of every error the library throws. The C API maps NumericError to
// CAPGEN_NUMERIC_ERROR and everything else to CAPGEN_INPUT_ERROR.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class ContractError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class DatasetError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };

}  // namespace capgen
