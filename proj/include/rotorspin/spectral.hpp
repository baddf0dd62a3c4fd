#pragma once

#include <array>
#include <vector>

#include "rotorspin/geometry.hpp"
#include "rotorspin/spincore.hpp"

namespace rotorspin {

using Energies9 = Eigen::Matrix<double, 9, 1>;

// Columns of `vectors` are eigenvectors; energies ascending (rad/s).
struct EigenDecomposition {
  Energies9 energies;
  Operator9 vectors;
};

EigenDecomposition diagonalize(const Operator9& h);

// Ground-state NV-14N Hamiltonian for a static field given in the NV frame
// (Gauss). Result in rad/s.
Operator9 hamiltonian(const Eigen::Vector3d& b_gauss, const PhysicalConstants& c);

// Coupling per unit rf field (rad/s/G): gamma_e S.axis + gamma_n I.axis.
Operator9 rf_operator(const Eigen::Vector3d& axis, const PhysicalConstants& c);

// Instantaneous eigensystem over one rotation with labels that follow each
// state continuously from phi = 0. Label k is the k-th lowest level at
// phi = 0. Eigenvector phases are parallel-transported: the overlap between
// consecutive samples of the same label is real and positive.
struct AdiabaticTrack {
  FieldGeometry geometry;
  RotationConfig rotation;
  PhysicalConstants constants;
  std::vector<double> phi;              // n_samples + 1 points covering [0, 2pi]
  std::vector<Energies9> energies;      // indexed by label
  std::vector<Operator9> vectors;       // column k is label k
  std::array<int, 9> dominant_bare{};   // product-basis index of each label at phi = 0

  std::size_t size() const { return phi.size(); }
  int label_of_bare(int bare_index) const;
  // |0,+1> and |0,0> labels, the nuclear qubit pair.
  int eta() const;
  int zeta() const;
};

// Throws rotorspin::Error when two candidate overlaps are within 1e-3 of each
// other or the best overlap falls below 0.5; the message names the sample.
AdiabaticTrack build_track(const FieldGeometry& geom, const RotationConfig& rot,
                           const PhysicalConstants& c, int n_samples = 4096);

// Populations of the tracked state that starts in `bare_index` projected onto
// the aligned-field eigenstates, ordered by their dominant product state.
std::vector<std::array<double, 9>> bare_projections(const AdiabaticTrack& track, int bare_index);

// |E_b - E_a| / 2pi in Hz at every track sample.
std::vector<double> transition_frequency(const AdiabaticTrack& track, int label_a, int label_b);
std::vector<double> transition_frequency(const AdiabaticTrack& track);

// <zeta| V |eta> along the track, V = rf_operator(axis) (rad/s/G). The phase
// follows the track gauge.
std::vector<complex> coupling_element(const AdiabaticTrack& track, const Eigen::Vector3d& axis,
                                      const PhysicalConstants& c);

// |<0,0| gamma_n I.axis |0,+1>|: coupling of a bare nucleus to the same drive.
double bare_nuclear_coupling(const Eigen::Vector3d& axis, const PhysicalConstants& c);

// Gyromagnetic augmentation alpha'(phi) = |<zeta|V|eta>| / bare_nuclear_coupling.
std::vector<double> augmentation_factor(const AdiabaticTrack& track, const Eigen::Vector3d& axis,
                                        const PhysicalConstants& c);

}  // namespace rotorspin
