/*
 * spectral.hpp — discrete Fourier transforms of periodic fields (FFTW).
 *
 * Conventions: forward coefficients are normalized by the node count, so
 * zhat(0) is the field mean and sum_k |zhat(k)|^2 equals the squared grid L2
 * norm (Parseval). The inverse is the plain unnormalized synthesis
 * z(x) = sum_k zhat(k) e^{2 pi i k.x}.
 */

#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "afree/periodic_field.hpp"

namespace afree {

// Fourier coefficients of a d-component field, stored in the same layout as
// PeriodicField (grid index <-> frequency via GridShape::signed_frequency).
struct SpectralField {
    GridShape grid;
    int components = 0;
    std::vector<std::complex<double>> data;

    Eigen::Map<const Eigen::VectorXcd> coeff(std::int64_t mode) const {
        return {data.data() + mode * components, components};
    }
    Eigen::Map<Eigen::VectorXcd> coeff(std::int64_t mode) {
        return {data.data() + mode * components, components};
    }
};

namespace detail {

inline void run_many_dft(const GridShape& grid, int components, std::complex<double>* buf, int sign) {
    std::vector<int> n = grid.dims();
    fftw_plan plan = fftw_plan_many_dft(
        grid.rank(), n.data(), components, reinterpret_cast<fftw_complex*>(buf), nullptr, components, 1,
        reinterpret_cast<fftw_complex*>(buf), nullptr, components, 1, sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw std::runtime_error("spectral: FFTW plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
}

}  // namespace detail

inline SpectralField forward_dft(const PeriodicField& field) {
    SpectralField out;
    out.grid = field.grid();
    out.components = field.components();
    out.data.assign(field.raw().begin(), field.raw().end());
    detail::run_many_dft(out.grid, out.components, out.data.data(), FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(out.grid.node_count());
    for (auto& c : out.data) c *= scale;
    return out;
}

// Synthesis back to a real field; imaginary parts (roundoff for
// conjugate-symmetric input) are discarded.
inline PeriodicField inverse_dft(const SpectralField& spec) {
    std::vector<std::complex<double>> buf = spec.data;
    detail::run_many_dft(spec.grid, spec.components, buf.data(), FFTW_BACKWARD);
    PeriodicField out(spec.grid, spec.components);
    for (std::size_t i = 0; i < buf.size(); ++i) out.raw()[i] = buf[i].real();
    return out;
}

}  // namespace afree
