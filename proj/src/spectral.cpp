#include "rotorspin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rotorspin/error.hpp"
#include "rotorspin/parallel.hpp"

namespace rotorspin {

EigenDecomposition diagonalize(const Operator9& h) {
  if (!h.allFinite()) throw Error("spectral", "Hamiltonian has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Operator9> solver(h);
  if (solver.info() != Eigen::Success) throw Error("spectral", "eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

struct EmbeddedSpins {
  Operator9 sx, sy, sz, ix, iy, iz, sz2, iz2, hyperfine_perp, hyperfine_par;
};

const EmbeddedSpins& embedded() {
  static const EmbeddedSpins e = [] {
    const SpinOperators s = spin1_operators();
    EmbeddedSpins out;
    out.sx = embed_electron(s.sx);
    out.sy = embed_electron(s.sy);
    out.sz = embed_electron(s.sz);
    out.ix = embed_nuclear(s.sx);
    out.iy = embed_nuclear(s.sy);
    out.iz = embed_nuclear(s.sz);
    out.sz2 = embed_electron(s.sz * s.sz);
    out.iz2 = embed_nuclear(s.sz * s.sz);
    out.hyperfine_perp = embed_pair(s.sx, s.sx) + embed_pair(s.sy, s.sy);
    out.hyperfine_par = embed_pair(s.sz, s.sz);
    return out;
  }();
  return e;
}

}  // namespace

Operator9 hamiltonian(const Eigen::Vector3d& b, const PhysicalConstants& c) {
  if (!b.allFinite()) throw Error("spectral", "magnetic field is not finite");
  const EmbeddedSpins& e = embedded();
  return c.d_zfs * e.sz2
       - c.gamma_e * (b.x() * e.sx + b.y() * e.sy + b.z() * e.sz)
       - c.gamma_n * (b.x() * e.ix + b.y() * e.iy + b.z() * e.iz)
       + c.quadrupole_q * e.iz2
       + c.a_par * e.hyperfine_par
       + c.a_perp * e.hyperfine_perp;
}

Operator9 rf_operator(const Eigen::Vector3d& axis, const PhysicalConstants& c) {
  const double norm = axis.norm();
  if (!(norm > 0.0) || !axis.allFinite()) throw Error("spectral", "rf axis must be a nonzero vector");
  const Eigen::Vector3d a = axis / norm;
  const EmbeddedSpins& e = embedded();
  return c.gamma_e * (a.x() * e.sx + a.y() * e.sy + a.z() * e.sz)
       + c.gamma_n * (a.x() * e.ix + a.y() * e.iy + a.z() * e.iz);
}

int AdiabaticTrack::label_of_bare(int bare_index) const {
  for (int k = 0; k < 9; ++k)
    if (dominant_bare[k] == bare_index) return k;
  throw Error("spectral", "no tracked state is dominated by basis state " + std::to_string(bare_index));
}

int AdiabaticTrack::eta() const { return label_of_bare(basis_index(0, 1)); }
int AdiabaticTrack::zeta() const { return label_of_bare(basis_index(0, 0)); }

AdiabaticTrack build_track(const FieldGeometry& geom, const RotationConfig& rot,
                           const PhysicalConstants& c, int n_samples) {
  if (n_samples < 64) throw Error("spectral", "build_track needs at least 64 samples");
  geom.validate();
  rot.validate();
  c.validate();

  const std::size_t n = static_cast<std::size_t>(n_samples) + 1;
  AdiabaticTrack track;
  track.geometry = geom;
  track.rotation = rot;
  track.constants = c;
  track.phi.resize(n);
  track.energies.resize(n);
  track.vectors.resize(n);

  std::vector<EigenDecomposition> raw(n);
  for (std::size_t j = 0; j < n; ++j) track.phi[j] = two_pi * static_cast<double>(j) / n_samples;
  parallel_for(n, [&](std::size_t j) {
    raw[j] = diagonalize(hamiltonian(static_field_nv_frame(track.phi[j], geom), c));
  });

  track.energies[0] = raw[0].energies;
  track.vectors[0] = raw[0].vectors;
  for (int k = 0; k < 9; ++k) {
    int best = 0;
    raw[0].vectors.col(k).cwiseAbs2().maxCoeff(&best);
    track.dominant_bare[k] = best;
  }

  for (std::size_t j = 1; j < n; ++j) {
    const Operator9& prev = track.vectors[j - 1];
    const Operator9& next = raw[j].vectors;
    const Operator9 overlap = prev.adjoint() * next;  // (label, candidate)
    const Eigen::Matrix<double, 9, 9> weight = overlap.cwiseAbs2();

    std::array<int, 9> assigned;
    assigned.fill(-1);
    std::array<bool, 9> taken{};
    for (int round = 0; round < 9; ++round) {
      int best_label = -1, best_cand = -1;
      double best = -1.0;
      for (int k = 0; k < 9; ++k) {
        if (assigned[k] >= 0) continue;
        for (int m = 0; m < 9; ++m) {
          if (!taken[m] && weight(k, m) > best) {
            best = weight(k, m);
            best_label = k;
            best_cand = m;
          }
        }
      }
      double runner_up = 0.0;
      for (int m = 0; m < 9; ++m)
        if (!taken[m] && m != best_cand) runner_up = std::max(runner_up, weight(best_label, m));
      if (best < 0.5 || best - runner_up < 1e-3) {
        std::ostringstream msg;
        msg << "ambiguous eigenstate matching at sample " << j << " (phi = " << track.phi[j]
            << " rad, overlap " << best << " vs " << runner_up << "); increase n_samples";
        throw Error("spectral", msg.str());
      }
      assigned[best_label] = best_cand;
      taken[best_cand] = true;
    }

    for (int k = 0; k < 9; ++k) {
      const int m = assigned[k];
      const complex o = overlap(k, m);
      track.vectors[j].col(k) = next.col(m) * (std::conj(o) / std::abs(o));
      track.energies[j](k) = raw[j].energies(m);
    }
  }
  return track;
}

std::vector<std::array<double, 9>> bare_projections(const AdiabaticTrack& track, int bare_index) {
  const int label = track.label_of_bare(bare_index);
  // Aligned-field eigenstates, reordered so entry b is the one dominated by
  // product state b.
  Operator9 bare;
  for (int k = 0; k < 9; ++k) bare.col(track.dominant_bare[k]) = track.vectors[0].col(k);

  std::vector<std::array<double, 9>> out(track.size());
  for (std::size_t j = 0; j < track.size(); ++j) {
    const Eigen::Matrix<complex, 9, 1> amp = bare.adjoint() * track.vectors[j].col(label);
    for (int b = 0; b < 9; ++b) out[j][b] = std::norm(amp(b));
  }
  return out;
}

std::vector<double> transition_frequency(const AdiabaticTrack& track, int label_a, int label_b) {
  std::vector<double> f(track.size());
  for (std::size_t j = 0; j < track.size(); ++j)
    f[j] = std::abs(track.energies[j](label_b) - track.energies[j](label_a)) / two_pi;
  return f;
}

std::vector<double> transition_frequency(const AdiabaticTrack& track) {
  return transition_frequency(track, track.eta(), track.zeta());
}

std::vector<complex> coupling_element(const AdiabaticTrack& track, const Eigen::Vector3d& axis,
                                      const PhysicalConstants& c) {
  const Operator9 v = rf_operator(axis, c);
  const int eta = track.eta();
  const int zeta = track.zeta();
  std::vector<complex> out(track.size());
  for (std::size_t j = 0; j < track.size(); ++j)
    out[j] = track.vectors[j].col(zeta).dot(v * track.vectors[j].col(eta));
  return out;
}

double bare_nuclear_coupling(const Eigen::Vector3d& axis, const PhysicalConstants& c) {
  const SpinOperators s = spin1_operators();
  const Eigen::Vector3d a = axis.normalized();
  const Matrix3c ia = a.x() * s.sx + a.y() * s.sy + a.z() * s.sz;
  // rows/cols: 0 -> m=+1, 1 -> m=0
  const double element = std::abs(c.gamma_n * ia(1, 0));
  if (!(element > 0.0)) throw Error("spectral", "rf axis has no transverse component");
  return element;
}

std::vector<double> augmentation_factor(const AdiabaticTrack& track, const Eigen::Vector3d& axis,
                                        const PhysicalConstants& c) {
  const double bare = bare_nuclear_coupling(axis, c);
  const std::vector<complex> v = coupling_element(track, axis, c);
  std::vector<double> alpha(v.size());
  std::transform(v.begin(), v.end(), alpha.begin(), [bare](complex x) { return std::abs(x) / bare; });
  return alpha;
}

}  // namespace rotorspin
