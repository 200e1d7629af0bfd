"""Self-similar profile of the fractional heat kernel.

The kernel of u_t + (-Delta)^s u = 0 with unit Dirac datum is self-similar,
h(x,t) = t^{-N/(2s)} H(|x| t^{-1/(2s)}), and H is the N-dimensional inverse
Fourier transform of exp(-(2 pi |xi|)^{2s}) restricted to a radius.  No
closed form exists except s = 1/2 (Poisson kernel) and s = 1 (Gaussian), so
H is tabulated here by reducing the Fourier integral to a one-dimensional
Bessel-type oscillatory integral:

    H(sigma)  =  2 pi sigma^{-nu} int_0^inf e^{-(2 pi rho)^{2s}}
                 J_nu(2 pi sigma rho) rho^{nu+1} drho,     nu = N/2 - 1,

and H' by the identically differentiated integrand (order nu+1).  Panels are
aligned with the Bessel oscillation and graded against the stretched-
exponential decay, so the same machinery covers s near 0 (slow decay, many
oscillations) and s near 1.

The far field is a power envelope: H(sigma) ~ sum_k c_k sigma^{-(N+2ks)}
with explicitly known coefficients; the leading one equals the principal-
value normalization constant of (-Delta)^s.  Mass quadrature uses that
series, since the kernel's heavy tail carries non-negligible mass for
small s.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gammaln, j0, j1, jv, rgamma

from .errors import DomainError, OutOfTableError, ProfileError, QuadratureError
from .quadrature import panel_nodes

__all__ = [
    "KernelProfile", "build_profile", "h_value", "check_envelope",
    "check_scaling_ode", "sphere_area", "profile_origin_value",
    "tail_series_coefficients", "tail_mass_beyond", "save_profile",
    "load_profile", "profile_csv",
]

_U_MAX = 46.0          # e^{-46} ~ 1e-20: decay-factor truncation
_TWO_PI = 2.0 * math.pi


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1)."""
    return float(2.0 * math.pi ** (0.5 * N) * math.exp(-gammaln(0.5 * N)))


def _bessel(nu: float, z: np.ndarray) -> np.ndarray:
    """J_nu on positive arguments, with fast closed forms for the orders
    that actually occur for N <= 5."""
    if nu == 0.0:
        return j0(z)
    if nu == 1.0:
        return j1(z)
    pref = np.sqrt(2.0 / (np.pi * z))
    if nu == -0.5:
        return pref * np.cos(z)
    if nu == 0.5:
        return pref * np.sin(z)
    if nu == 1.5:
        out = np.empty_like(z)
        small = z < 0.1
        zs = z[small]
        # series for sin(z)/z - cos(z), avoids cancellation
        out[small] = pref[small] * zs ** 2 * (
            1.0 / 3.0 - zs ** 2 / 30.0 + zs ** 4 / 840.0)
        zl = z[~small]
        out[~small] = pref[~small] * (np.sin(zl) / zl - np.cos(zl))
        return out
    return jv(nu, z)


def profile_origin_value(N: int, s: float) -> float:
    """H(0) in closed form: omega_{N-1} (2 pi)^{-N} Gamma(N/(2s)) / (2s)."""
    return float(sphere_area(N) * _TWO_PI ** (-N)
                 * math.exp(gammaln(0.5 * N / s)) / (2.0 * s))


def _decay_rho_edges(s: float) -> np.ndarray:
    """Breakpoints resolving exp(-(2 pi rho)^{2s}): graded near 0 (the
    integrand has a rho^{2s}-type kink there), unit steps in u after."""
    u = np.concatenate([
        np.geomspace(1e-8, 1.0, 15),
        np.arange(2.0, _U_MAX + 1.0),
    ])
    return u ** (0.5 / s) / _TWO_PI


def _oscillatory_nodes(s: float, nu: float, sigma: float, order: int,
                       max_panels: int = 200000):
    """Shared panel set for int e^{-(2 pi rho)^{2s}} J_nu(2 pi sigma rho)
    rho^{power} drho: panels between consecutive Bessel zeros (McMahon
    approximations suffice for alignment) unioned with decay grading."""
    rho_decay = _decay_rho_edges(s)
    rho_max = rho_decay[-1]
    z_max = _TWO_PI * sigma * rho_max
    k_max = int(z_max / math.pi - 0.5 * nu + 0.25) + 1
    if k_max > max_panels:
        raise QuadratureError(
            f"oscillatory panel count {k_max} exceeds cap at sigma={sigma}")
    edges = [np.array([0.0]), rho_decay]
    if k_max >= 1:
        zeros = (np.arange(1, k_max + 1) + 0.5 * nu - 0.25) * math.pi
        zeros = zeros[zeros > 0.0] / (_TWO_PI * sigma)
        edges.append(zeros[zeros < rho_max])
    grid = np.unique(np.concatenate(edges))
    return panel_nodes(grid, order)


def _profile_point(N: int, s: float, sigma: float,
                   order: int = 10) -> tuple[float, float]:
    """(H(sigma), H'(sigma)) by panel quadrature of the radial Fourier
    integral and its differentiated counterpart (order nu+1)."""
    nu = 0.5 * N - 1.0
    if sigma == 0.0:
        return profile_origin_value(N, s), 0.0
    nodes, w = _oscillatory_nodes(s, nu, sigma, order)
    decay = np.exp(-(_TWO_PI * nodes) ** (2.0 * s))
    z = _TWO_PI * sigma * nodes
    base = w * decay
    h_val = _TWO_PI * sigma ** (-nu) * float(
        np.dot(base, _bessel(nu, z) * nodes ** (nu + 1.0)))
    hp_val = -(_TWO_PI ** 2) * sigma ** (-nu) * float(
        np.dot(base, _bessel(nu + 1.0, z) * nodes ** (nu + 2.0)))
    return h_val, hp_val


def ball_mass(N: int, s: float, radius: float, order: int = 10) -> float:
    """Exact Fourier-side mass of the kernel inside |x| <= radius:

    int_{|x|<=R} h(x,1) dx = omega_{N-1} R^{nu+1}
        int_0^inf e^{-(2 pi rho)^{2s}} rho^{nu} J_{nu+1}(2 pi R rho) drho,

    from integrating the Bessel representation term by term
    (d/dz[z^{nu+1} J_{nu+1}] = z^{nu+1} J_nu).  For (N=1, s=1/2) this is
    (2/pi) arctan(R).
    """
    nu = 0.5 * N - 1.0
    nodes, w = _oscillatory_nodes(s, nu + 1.0, radius, order)
    decay = np.exp(-(_TWO_PI * nodes) ** (2.0 * s))
    z = _TWO_PI * radius * nodes
    return float(sphere_area(N) * radius ** (nu + 1.0)
                 * np.dot(w * decay, _bessel(nu + 1.0, z) * nodes ** nu))


def tail_series_coefficients(N: int, s: float, k_max: int = 12) -> np.ndarray:
    """Coefficients of the far-field expansion H ~ sum c_k sigma^{-(N+2ks)}.

    c_k = (-1)^k 2^{2ks} pi^{-N/2} Gamma((N+2ks)/2) / (k! Gamma(-ks)); the
    1/Gamma factor vanishes at integer ks, matching the closed forms.
    """
    ks = np.arange(1, k_max + 1)
    sign = np.where(ks % 2 == 0, 1.0, -1.0)
    logs = (2.0 * ks * s * math.log(2.0) - 0.5 * N * math.log(math.pi)
            + gammaln((N + 2.0 * ks * s) / 2.0) - gammaln(ks + 1.0))
    return sign * np.exp(logs) * rgamma(-ks * s)


def tail_mass_beyond(N: int, s: float, sigma0: float, mu: float = 0.0,
                     k_max: int = 12) -> float:
    """omega_{N-1} int_{sigma0}^inf sigma^{N-1-mu} H(sigma) dsigma via the
    far-field series (term-k integral sigma0^{-mu-2ks}/(mu+2ks))."""
    coeffs = tail_series_coefficients(N, s, k_max)
    ks = np.arange(1, k_max + 1)
    terms = coeffs * sigma0 ** (-mu - 2.0 * ks * s) / (mu + 2.0 * ks * s)
    total = float(sphere_area(N) * terms.sum())
    tail_err = float(sphere_area(N) * np.abs(terms[-2:]).max())
    if tail_err > 1e-7 * max(abs(total), 1e-30):
        raise QuadratureError(
            f"far-field mass series not converged at sigma0={sigma0}")
    return total


@dataclass
class KernelProfile:
    """Tabulated self-similar kernel profile H and H' for one (N, s)."""

    N: int
    s: float
    sigma_grid: np.ndarray
    H_values: np.ndarray
    Hprime_values: np.ndarray
    mass: float
    tail_coefficient: float   # c in the extension H ~ c sigma^{-(N+2s)}
    _interp: CubicHermiteSpline | None = field(default=None, repr=False)

    @property
    def sigma_max(self) -> float:
        return float(self.sigma_grid[-1])

    def interpolant(self) -> CubicHermiteSpline:
        if self._interp is None:
            self._interp = CubicHermiteSpline(
                self.sigma_grid, self.H_values, self.Hprime_values)
        return self._interp

    def h_of_sigma(self, sigma, allow_extension: bool = False):
        """H at arbitrary sigma >= 0 (cubic Hermite inside the table)."""
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma < 0.0):
            raise DomainError("sigma must be nonnegative")
        beyond = sigma > self.sigma_max
        if np.any(beyond):
            if not allow_extension:
                raise OutOfTableError(
                    f"sigma beyond table edge {self.sigma_max}; "
                    "pass allow_extension=True to use the power envelope")
            out = np.empty_like(sigma)
            out[~beyond] = self.interpolant()(sigma[~beyond])
            out[beyond] = self.tail_coefficient * sigma[beyond] ** (
                -(self.N + 2.0 * self.s))
            return out if out.ndim else float(out)
        val = self.interpolant()(sigma)
        return val if val.ndim else float(val)

    def validate(self) -> None:
        H, Hp = self.H_values, self.Hprime_values
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(Hp))):
            raise ProfileError("profile has non-finite entries")
        if np.any(H <= 0.0):
            raise ProfileError("profile has non-positive H entries")
        if np.any(np.diff(H) >= 0.0) and len(H) > 1:
            raise ProfileError("H is not strictly decreasing")
        if np.any(Hp > 1e-12 * H[0]):
            raise ProfileError("H' has positive entries")


def build_profile(N: int, s: float, sigma_max: float,
                  n_points: int) -> KernelProfile:
    """Tabulate H and H' on a grid geometric in 1+sigma.

    Raises QuadratureError when a point's oscillatory quadrature cannot be
    trusted (reported with the offending sigma).
    """
    if N < 1 or int(N) != N:
        raise DomainError(f"dimension must be a positive integer, got {N}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"fractional order must lie in (0,1), got {s}")
    if sigma_max <= 0.0:
        raise DomainError("sigma_max must be positive")
    if n_points < 16:
        raise DomainError("need at least 16 table points")

    sigma = (1.0 + sigma_max) ** np.linspace(0.0, 1.0, n_points) - 1.0
    sigma[0] = 0.0
    sigma[-1] = sigma_max
    H = np.empty(n_points)
    Hp = np.empty(n_points)
    for i, sg in enumerate(sigma):
        try:
            H[i], Hp[i] = _profile_point(N, s, float(sg))
        except QuadratureError as exc:
            raise QuadratureError(f"sigma={sg}: {exc}") from exc
    if np.any(~np.isfinite(H)) or np.any(H <= 0.0):
        bad = sigma[np.where(~np.isfinite(H) | (H <= 0.0))[0][0]]
        raise QuadratureError(f"quadrature produced invalid H at sigma={bad}")

    # envelope coefficient fitted over the last decade, slope pinned
    window = sigma >= sigma_max / 10.0
    c_fit = float(np.exp(np.mean(
        np.log(H[window]) + (N + 2.0 * s) * np.log(sigma[window]))))

    mass = ball_mass(N, s, sigma_max) + tail_mass_beyond(N, s, sigma_max)
    prof = KernelProfile(N=N, s=s, sigma_grid=sigma, H_values=H,
                         Hprime_values=Hp, mass=mass, tail_coefficient=c_fit)
    prof.validate()
    return prof


def h_value(profile: KernelProfile, x_norm: float, t: float,
            allow_extension: bool = False) -> float:
    """Kernel value h(x,t) = t^{-N/(2s)} H(|x| t^{-1/(2s)}).

    Beyond the table edge an OutOfTableError is raised unless the fitted
    power envelope is explicitly allowed.
    """
    if t <= 0.0:
        raise DomainError("time must be positive")
    if x_norm < 0.0:
        raise DomainError("radius must be nonnegative")
    scale = t ** (-1.0 / (2.0 * profile.s))
    sigma = x_norm * scale
    return float(t ** (-profile.N / (2.0 * profile.s))
                 * profile.h_of_sigma(sigma, allow_extension))


def check_envelope(profile: KernelProfile) -> float:
    """Smallest certified two-sided envelope constant on the grid.

    C = max over grid of max(E, 1/E) with E = H (1 + sigma^2)^{(N+2s)/2},
    the form in which the profile envelope is stated (for the Poisson
    cases E is exactly constant, C = pi for N=1 and pi^2 for N=3).
    """
    H = profile.H_values
    if np.any(~np.isfinite(H)) or np.any(H <= 0.0):
        raise ProfileError("profile corrupt: non-finite or non-positive H")
    E = H * (1.0 + profile.sigma_grid ** 2) ** (0.5 * (profile.N + 2.0 * profile.s))
    C = float(max(E.max(), (1.0 / E).max()))
    if not math.isfinite(C):
        raise ProfileError("envelope constant not finite")
    return C


def check_scaling_ode(profile: KernelProfile, radii=None,
                      lap_radial=None) -> float:
    """Max relative residual of 2s (-Delta)^s H = N H + r H'.

    Cross-validates the kernel table against the singular-integral
    evaluator (injected via lap_radial, defaulting to the fracop one).
    """
    if lap_radial is None:
        from .fracop import frac_laplacian_quadrature_radial
        lap_radial = frac_laplacian_quadrature_radial
    N, s = profile.N, profile.s
    if radii is None:
        radii = np.geomspace(0.2, max(profile.sigma_max / 10.0, 0.4), 10)
    f = _profile_field(profile)
    spline = profile.interpolant()
    worst = 0.0
    for r in np.asarray(radii, dtype=float):
        lap = lap_radial(f, N, s, float(r))
        lhs = 2.0 * s * lap
        rhs = N * float(spline(r)) + r * float(spline.derivative()(r))
        worst = max(worst, abs(lhs - rhs) / (N * float(spline(r))))
    return worst


def _profile_field(profile: KernelProfile):
    """Radial-field view of the table for the singular-integral machinery."""
    from .fracop import RadialField
    grid = profile.sigma_grid
    keep = grid > 0.0
    return RadialField(r_grid=grid[keep], values=profile.H_values[keep],
                       decay_exponent=-(profile.N + 2.0 * profile.s))


def profile_csv(profile: KernelProfile) -> str:
    lines = ["sigma,H,Hprime"]
    for sg, h, hp in zip(profile.sigma_grid, profile.H_values,
                         profile.Hprime_values):
        lines.append(",".join(format(v, ".17g") for v in (sg, h, hp)))
    return "\n".join(lines) + "\n"


def save_profile(profile: KernelProfile, csv_path, json_path) -> None:
    with open(csv_path, "w") as fh:
        fh.write(profile_csv(profile))
    header = {
        "N": profile.N, "s": profile.s,
        "sigma_max": profile.sigma_max,
        "n_points": int(len(profile.sigma_grid)),
        "mass": profile.mass,
        "envelope_constant": check_envelope(profile),
        "tail_coefficient": profile.tail_coefficient,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_profile(csv_path, json_path) -> KernelProfile:
    with open(json_path) as fh:
        header = json.load(fh)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    return KernelProfile(
        N=int(header["N"]), s=float(header["s"]),
        sigma_grid=data[:, 0], H_values=data[:, 1], Hprime_values=data[:, 2],
        mass=float(header["mass"]),
        tail_coefficient=float(header["tail_coefficient"]),
    )
