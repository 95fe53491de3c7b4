#pragma once

#include <Eigen/Core>

#include <bit>
#include <cstdint>
#include <limits>

namespace pcast {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Column vector with an explicit per-cell presence flag. `values` is only
/// meaningful where `present` is true; absent slots hold NaN.
struct MaskedVector {
    Eigen::VectorXd values;
    BoolArray present;

    MaskedVector() = default;
    explicit MaskedVector(Eigen::Index n)
        : values(Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN())),
          present(BoolArray::Constant(n, false)) {}

    static MaskedVector complete(Eigen::VectorXd v) {
        MaskedVector out;
        out.present = BoolArray::Constant(v.size(), true);
        out.values = std::move(v);
        return out;
    }

    Eigen::Index size() const { return values.size(); }
    Eigen::Index observed_count() const { return present.count(); }
    Eigen::Index missing_count() const { return size() - observed_count(); }
    double missing_fraction() const {
        return size() == 0 ? 0.0 : static_cast<double>(missing_count()) / static_cast<double>(size());
    }
    bool all_present() const { return present.all(); }

    void set(Eigen::Index i, double v) {
        values[i] = v;
        present[i] = true;
    }

    /// Observed values in index order.
    Eigen::VectorXd observed() const {
        Eigen::VectorXd out(observed_count());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < size(); ++i)
            if (present[i]) out[k++] = values[i];
        return out;
    }

    friend bool operator==(const MaskedVector& a, const MaskedVector& b) {
        if (a.size() != b.size()) return false;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a.present[i] != b.present[i]) return false;
            if (a.present[i] && !same_bits(a.values[i], b.values[i])) return false;
        }
        return true;
    }
};

/// Dense matrix with per-cell presence flags, same convention as MaskedVector.
struct MaskedMatrix {
    Eigen::MatrixXd values;
    BoolMask present;

    MaskedMatrix() = default;
    MaskedMatrix(Eigen::Index rows, Eigen::Index cols)
        : values(Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN())),
          present(BoolMask::Constant(rows, cols, false)) {}

    static MaskedMatrix complete(Eigen::MatrixXd m) {
        MaskedMatrix out;
        out.present = BoolMask::Constant(m.rows(), m.cols(), true);
        out.values = std::move(m);
        return out;
    }

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    void set(Eigen::Index i, Eigen::Index j, double v) {
        values(i, j) = v;
        present(i, j) = true;
    }

    bool all_present() const { return present.all(); }
    Eigen::Index missing_count() const { return rows() * cols() - present.count(); }

    MaskedVector col(Eigen::Index j) const {
        MaskedVector out;
        out.values = values.col(j);
        out.present = present.col(j);
        return out;
    }

    MaskedVector row(Eigen::Index i) const {
        MaskedVector out;
        out.values = values.row(i).transpose();
        out.present = present.row(i).transpose();
        return out;
    }

    double column_missing_fraction(Eigen::Index j) const {
        return rows() == 0 ? 0.0
                           : static_cast<double>(rows() - present.col(j).count()) / static_cast<double>(rows());
    }

    friend bool operator==(const MaskedMatrix& a, const MaskedMatrix& b) {
        if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                if (a.present(i, j) != b.present(i, j)) return false;
                if (a.present(i, j) && !same_bits(a.values(i, j), b.values(i, j))) return false;
            }
        return true;
    }
};

}  // namespace pcast
