#pragma once

#include <stdexcept>
#include <string>

namespace posepoison {

// Base type for every error thrown by the toolkit. The CLI maps subclasses
// onto its exit-code contract; tests catch the concrete types.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- geometry ---

class NonPositiveDepth : public Error {
 public:
  explicit NonPositiveDepth(double z)
      : Error("point at non-positive camera depth z=" + std::to_string(z)), z(z) {}
  double z;
};

class InvalidRotation : public Error {
 public:
  explicit InvalidRotation(const std::string& msg) : Error("invalid rotation: " + msg) {}
};

class InvalidIntrinsics : public Error {
 public:
  explicit InvalidIntrinsics(const std::string& msg) : Error("invalid intrinsics: " + msg) {}
};

// --- mesh ---

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason),
        line(line),
        reason(reason) {}
  int line;
  std::string reason;
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& msg) : Error("index out of range: " + msg) {}
};

class DegenerateMesh : public Error {
 public:
  explicit DegenerateMesh(const std::string& msg) : Error("degenerate mesh: " + msg) {}
};

// --- renderer ---

class EmptyRender : public Error {
 public:
  EmptyRender() : Error("rasterization covered zero pixels") {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};

// --- dataset ---

class PlacementFailed : public Error {
 public:
  explicit PlacementFailed(const std::string& msg) : Error("placement failed: " + msg) {}
};

class TooFewRecords : public Error {
 public:
  explicit TooFewRecords(std::size_t n)
      : Error("too few records: " + std::to_string(n)), count(n) {}
  std::size_t count;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& reason)
      : Error("schema error in '" + field + "': " + reason), field(field), reason(reason) {}
  std::string field;
  std::string reason;
};

class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& path) : Error("missing file: " + path), path(path) {}
  std::string path;
};

// --- poison engine ---

class AlreadyPoisoned : public Error {
 public:
  explicit AlreadyPoisoned(const std::string& id)
      : Error("record already poisoned: " + id) {}
};

class InconsistentAnnotation : public Error {
 public:
  explicit InconsistentAnnotation(const std::string& msg)
      : Error("inconsistent annotation: " + msg) {}
};

// --- pnp solver ---

class EmptyMask : public Error {
 public:
  EmptyMask() : Error("vector field mask is empty") {}
};

class TooFewPixels : public Error {
 public:
  explicit TooFewPixels(const std::string& msg) : Error("too few pixels: " + msg) {}
};

class NoConsensus : public Error {
 public:
  explicit NoConsensus(const std::string& msg) : Error("no ransac consensus: " + msg) {}
};

class DegenerateConfiguration : public Error {
 public:
  explicit DegenerateConfiguration(const std::string& msg)
      : Error("degenerate configuration: " + msg) {}
};

class NonConvergent : public Error {
 public:
  explicit NonConvergent(const std::string& msg) : Error("solver did not converge: " + msg) {}
};

// --- metrics / defense ---

class EmptyPointSet : public Error {
 public:
  EmptyPointSet() : Error("model point set is empty") {}
};

class UnknownRecordId : public Error {
 public:
  explicit UnknownRecordId(const std::string& id)
      : Error("prediction references unknown record id: " + id), id(id) {}
  std::string id;
};

class MissingTargetPose : public Error {
 public:
  explicit MissingTargetPose(const std::string& id)
      : Error("poisoned record has no target pose: " + id) {}
};

class DuplicateRatio : public Error {
 public:
  explicit DuplicateRatio(double ratio)
      : Error("duplicate clean ratio in defense runs: " + std::to_string(ratio)) {}
};

}  // namespace posepoison
