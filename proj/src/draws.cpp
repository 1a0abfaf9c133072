#include "pie/draws.hpp"

#include "pie/error.hpp"

namespace pie {

DrawMatrix::DrawMatrix(Eigen::MatrixXd values, std::uint64_t seed_used,
                       std::optional<std::size_t> shard_id)
    : values_(std::move(values)), seed_used_(seed_used), shard_id_(shard_id) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorKind::EmptyDraws, "draw matrix has no rows or no columns");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorKind::InvalidData, "draw matrix contains non-finite entries");
  }
}

std::vector<double> DrawMatrix::column(std::size_t j) const {
  if (j >= d()) throw Error(ErrorKind::Shape, "column index out of range");
  std::vector<double> out(T());
  Eigen::Map<Eigen::VectorXd>(out.data(), values_.rows()) = values_.col(static_cast<Eigen::Index>(j));
  return out;
}

bool operator==(const DrawMatrix& lhs, const DrawMatrix& rhs) {
  return lhs.values_.rows() == rhs.values_.rows() && lhs.values_.cols() == rhs.values_.cols() &&
         lhs.values_ == rhs.values_ && lhs.seed_used_ == rhs.seed_used_ &&
         lhs.shard_id_ == rhs.shard_id_;
}

}  // namespace pie
