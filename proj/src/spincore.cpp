#include "rotorspin/spincore.hpp"

#include <cmath>
#include <string>

#include "rotorspin/error.hpp"

namespace rotorspin {

void PhysicalConstants::validate() const {
  const double values[] = {d_zfs, gamma_e, gamma_n, quadrupole_q, a_par, a_perp};
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("spincore", "physical constant is not finite");
  }
  if (d_zfs <= 0.0) throw Error("spincore", "d_zfs must be positive");
}

SpinOperators spin1_operators() {
  const double r = 1.0 / std::sqrt(2.0);
  const complex i{0.0, 1.0};
  SpinOperators ops;
  ops.sx << 0, r, 0,
            r, 0, r,
            0, r, 0;
  ops.sy << 0, -i * r, 0,
            i * r, 0, -i * r,
            0, i * r, 0;
  ops.sz << 1, 0, 0,
            0, 0, 0,
            0, 0, -1;
  ops.identity3 = Matrix3c::Identity();
  return ops;
}

int basis_index(int m_s, int m_i) {
  if (m_s < -1 || m_s > 1 || m_i < -1 || m_i > 1)
    throw Error("spincore", "spin projection out of range");
  return 3 * (1 - m_s) + (1 - m_i);
}

namespace {

void require_3x3(const Eigen::MatrixXcd& op) {
  if (op.rows() != 3 || op.cols() != 3) {
    throw Error("spincore", "expected a 3x3 operator, got " + std::to_string(op.rows()) +
                                "x" + std::to_string(op.cols()));
  }
}

}  // namespace

Operator9 embed_pair(const Eigen::MatrixXcd& op_s, const Eigen::MatrixXcd& op_i) {
  require_3x3(op_s);
  require_3x3(op_i);
  Operator9 out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      out.block<3, 3>(3 * a, 3 * b) = op_s(a, b) * op_i;
  return out;
}

Operator9 embed_electron(const Eigen::MatrixXcd& op) {
  return embed_pair(op, Matrix3c::Identity());
}

Operator9 embed_nuclear(const Eigen::MatrixXcd& op) {
  return embed_pair(Matrix3c::Identity(), op);
}

}  // namespace rotorspin
