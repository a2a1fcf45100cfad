#pragma once

#include <array>
#include <string>

namespace graingraph {

// Euler angle triple in degrees, Bunge Z-X-Z convention (phi1, Phi, phi2).
struct EulerDeg {
    double phi1 = 0.0;
    double Phi = 0.0;
    double phi2 = 0.0;
};

// Unit quaternion, scalar-first.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

enum class Symmetry { None, Hexagonal };

Symmetry symmetry_from_string(const std::string& name);
std::string to_string(Symmetry sym);

// Maps phi1/phi2 into [0, 360) and Phi into [0, 180] without changing the
// orientation: Phi in (180, 360) folds via
// (phi1, Phi, phi2) == (phi1 + 180, 360 - Phi, phi2 + 180).
EulerDeg normalize_euler(const EulerDeg& e);

Quat quat_mul(const Quat& a, const Quat& b);
Quat quat_conj(const Quat& q);
Quat quat_normalize(const Quat& q);

// Rotation of `angle_deg` about a coordinate axis (0 = x, 1 = y, 2 = z).
Quat quat_axis_rotation(int axis, double angle_deg);

// Arbitrary-axis rotation; axis need not be normalized.
Quat quat_from_axis_angle(const std::array<double, 3>& axis, double angle_deg);

// q for R = Rz(phi1) * Rx(Phi) * Rz(phi2).
Quat quat_from_euler(const EulerDeg& e);

// Inverse of quat_from_euler; result is normalized per normalize_euler.
EulerDeg euler_from_quat(const Quat& q);

// 3x3 rotation matrix of q, row-major.
std::array<double, 9> quat_to_matrix(const Quat& q);

// Rotation angle of q in degrees, in [0, 180].
double rotation_angle_deg(const Quat& q);

// The 12 proper rotations of the hexagonal point group 622
// (c-axis rotations by multiples of 60 degrees plus six in-plane two-folds).
const std::array<Quat, 12>& hexagonal_operators();

// Misorientation angle between two orientations in degrees. With
// Symmetry::None the plain rotation angle of R_a * R_b^T; with
// Symmetry::Hexagonal the minimum over the 12 hexagonal proper rotations,
// which lands in [0, ~93.84].
double misorientation_deg(const EulerDeg& a, const EulerDeg& b,
                          Symmetry sym = Symmetry::None);
double misorientation_deg(const Quat& qa, const Quat& qb,
                          Symmetry sym = Symmetry::None);

} // namespace graingraph
