#pragma once

// Closed-form SU(2) algebra on fixed-size Eigen types.

#include <Eigen/Core>
#include <cmath>
#include <complex>

namespace remag {

template <typename Scalar> using Complex = std::complex<Scalar>;
template <typename Scalar> using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;
template <typename Scalar> using Vector2c = Eigen::Matrix<Complex<Scalar>, 2, 1>;
template <typename Scalar> using Unitary2 = Matrix2c<Scalar>;

using Unitary2d = Unitary2<double>;
using State2d = Vector2c<double>;

template <typename Scalar = double> Matrix2c<Scalar> pauli_x()
{
    Matrix2c<Scalar> m;
    m << Scalar(0), Scalar(1), Scalar(1), Scalar(0);
    return m;
}

template <typename Scalar = double> Matrix2c<Scalar> pauli_y()
{
    const Complex<Scalar> i(0, 1);
    Matrix2c<Scalar> m;
    m << Scalar(0), -i, i, Scalar(0);
    return m;
}

template <typename Scalar = double> Matrix2c<Scalar> pauli_z()
{
    Matrix2c<Scalar> m;
    m << Scalar(1), Scalar(0), Scalar(0), Scalar(-1);
    return m;
}

/// exp(-i (a*1 + hx*sx + hy*sy + hz*sz) * dt) for real coefficients, via the
/// axis-angle identity exp(-i phi n.sigma) = cos(phi) - i sin(phi) n.sigma.
template <typename Scalar>
Unitary2<Scalar> su2_exp(Scalar a, Scalar hx, Scalar hy, Scalar hz, Scalar dt)
{
    using std::cos;
    using std::sin;
    using std::sqrt;
    const Scalar norm = sqrt(hx * hx + hy * hy + hz * hz);
    const Scalar phi = norm * dt;
    const Scalar c = cos(phi);
    // sin(phi)/norm, continuous at norm -> 0
    const Scalar s = norm > Scalar(0) ? sin(phi) / norm : dt;
    const Complex<Scalar> g = std::polar(Scalar(1), -a * dt);
    const Complex<Scalar> i(0, 1);
    Unitary2<Scalar> u;
    u(0, 0) = g * Complex<Scalar>(c, -s * hz);
    u(1, 1) = g * Complex<Scalar>(c, s * hz);
    u(0, 1) = g * (-i * s * Complex<Scalar>(hx, -hy));
    u(1, 0) = g * (-i * s * Complex<Scalar>(hx, hy));
    return u;
}

template <typename Derived> typename Derived::RealScalar unitarity_error(const Eigen::MatrixBase<Derived>& u)
{
    using Mat = Eigen::Matrix<typename Derived::Scalar, 2, 2>;
    return (u.adjoint() * u - Mat::Identity()).norm();
}

/// Population of |0> after applying u to |0>.
template <typename Derived> typename Derived::RealScalar ground_population(const Eigen::MatrixBase<Derived>& u)
{
    return std::norm(u(0, 0));
}

} // namespace remag
