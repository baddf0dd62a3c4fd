#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace rotorspin {

using complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Operator9 = Eigen::Matrix<complex, 9, 9>;
using State9 = Eigen::Matrix<complex, 9, 1>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Coupling constants of the NV-14N ground-state Hamiltonian, stored as
// angular frequencies (rad/s, or rad/s/G for gyromagnetic ratios).
struct PhysicalConstants {
  double d_zfs = two_pi * 2.870e9;
  double gamma_e = two_pi * -2.8e6;
  // 307.7 Hz/G is the refined 14N value; 307 Hz/G is also quoted in the
  // literature and can be set through the config.
  double gamma_n = two_pi * 307.7;
  double quadrupole_q = two_pi * -4.9457e6;
  double a_par = two_pi * -2.162e6;
  double a_perp = two_pi * -2.62e6;

  // Throws rotorspin::Error when a constant is non-finite or d_zfs <= 0.
  void validate() const;
};

struct SpinOperators {
  Matrix3c sx;
  Matrix3c sy;
  Matrix3c sz;
  Matrix3c identity3;
};

// Spin-1 matrices in the {+1, 0, -1} basis (hbar = 1).
SpinOperators spin1_operators();

// Product basis index for |m_S, m_I>: 3*(1-m_S) + (1-m_I), so |+1,+1> is 0
// and |-1,-1> is 8.
int basis_index(int m_s, int m_i);

// Kronecker embeddings into the 9-dimensional electron (x) nuclear space.
// Inputs must be 3x3; anything else throws.
Operator9 embed_electron(const Eigen::MatrixXcd& op);
Operator9 embed_nuclear(const Eigen::MatrixXcd& op);
Operator9 embed_pair(const Eigen::MatrixXcd& op_s, const Eigen::MatrixXcd& op_i);

}  // namespace rotorspin
