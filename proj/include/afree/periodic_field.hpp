/*
 * periodic_field.hpp — sampled vector fields on the unit torus.
 *
 * A PeriodicField holds a d-component value at every node of a uniform grid
 * on (0,1)^N, node x = (j_1/n_1, ..., j_N/n_N). Storage is row-major over the
 * grid (last axis fastest) with the d components contiguous per node, which
 * is also the layout the spectral transform expects.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace afree {

class GridShape {
  public:
    GridShape() = default;
    explicit GridShape(std::vector<int> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("GridShape: empty dims");
        total_ = 1;
        for (int n : dims_) {
            if (n < 1) throw std::invalid_argument("GridShape: axis size < 1");
            total_ *= n;
            if (total_ > (std::int64_t{1} << 28)) throw std::invalid_argument("GridShape: grid too large");
        }
        strides_.assign(dims_.size(), 1);
        for (int i = static_cast<int>(dims_.size()) - 2; i >= 0; --i)
            strides_[static_cast<std::size_t>(i)] =
                strides_[static_cast<std::size_t>(i + 1)] * dims_[static_cast<std::size_t>(i + 1)];
    }

    int rank() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    std::int64_t node_count() const { return total_; }

    std::int64_t flat(const std::vector<int>& coords) const {
        std::int64_t idx = 0;
        for (std::size_t a = 0; a < dims_.size(); ++a) idx += strides_[a] * coords[a];
        return idx;
    }

    std::vector<int> coords(std::int64_t flat_index) const {
        std::vector<int> c(dims_.size());
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            c[a] = static_cast<int>(flat_index / strides_[a]);
            flat_index %= strides_[a];
        }
        return c;
    }

    // Signed integer frequency represented by grid index j on an axis:
    // j for j <= n/2, j - n otherwise (Nyquist kept at +n/2 for even n).
    int signed_frequency(int axis, int index) const {
        int n = dims_[static_cast<std::size_t>(axis)];
        return index <= n / 2 ? index : index - n;
    }

    std::vector<int> signed_frequency(std::int64_t flat_index) const {
        std::vector<int> k = coords(flat_index);
        for (int a = 0; a < rank(); ++a) k[static_cast<std::size_t>(a)] = signed_frequency(a, k[static_cast<std::size_t>(a)]);
        return k;
    }

    // Largest grid spacing 1/n_i.
    double max_spacing() const {
        int n_min = dims_.front();
        for (int n : dims_) n_min = std::min(n_min, n);
        return 1.0 / static_cast<double>(n_min);
    }

    bool operator==(const GridShape& other) const { return dims_ == other.dims_; }

  private:
    std::vector<int> dims_;
    std::vector<std::int64_t> strides_;
    std::int64_t total_ = 0;
};

class PeriodicField {
  public:
    PeriodicField() = default;
    PeriodicField(GridShape grid, int components)
        : grid_(std::move(grid)), d_(components),
          data_(static_cast<std::size_t>(grid_.node_count()) * static_cast<std::size_t>(components), 0.0) {
        if (components < 1) throw std::invalid_argument("PeriodicField: components < 1");
    }

    const GridShape& grid() const { return grid_; }
    int components() const { return d_; }
    std::int64_t node_count() const { return grid_.node_count(); }

    Eigen::Map<const Eigen::VectorXd> value(std::int64_t node) const {
        return {data_.data() + node * d_, d_};
    }
    Eigen::Map<Eigen::VectorXd> value(std::int64_t node) {
        return {data_.data() + node * d_, d_};
    }
    const std::vector<double>& raw() const { return data_; }
    std::vector<double>& raw() { return data_; }

    Eigen::VectorXd mean() const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(d_);
        for (std::int64_t i = 0; i < node_count(); ++i) acc += value(i);
        return acc / static_cast<double>(node_count());
    }

    // Grid L2 norm: sqrt of the node average of |z(x)|^2, i.e. the L2((0,1)^N)
    // norm of the trigonometric interpolant by Parseval.
    double l2_norm() const {
        double acc = 0.0;
        for (std::int64_t i = 0; i < node_count(); ++i) acc += value(i).squaredNorm();
        return std::sqrt(acc / static_cast<double>(node_count()));
    }

    double max_norm() const {
        double acc = 0.0;
        for (std::int64_t i = 0; i < node_count(); ++i) acc = std::max(acc, value(i).lpNorm<Eigen::Infinity>());
        return acc;
    }

  private:
    GridShape grid_;
    int d_ = 0;
    std::vector<double> data_;
};

}  // namespace afree
