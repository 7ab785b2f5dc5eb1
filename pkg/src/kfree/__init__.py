"""Twin k-free numbers: sieves, local densities, Gauss-type sums, the
singular series, variance decompositions, and circle-method diagnostics.

Submodules are imported lazily so that the command-line entry point can pin
threading environment variables before numpy loads a BLAS.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # errors
    "CapacityError": "errors",
    "SieveCacheError": "errors",
    # exact_arith
    "RationalValue": "exact_arith",
    "Factorization": "exact_arith",
    "primes_up_to": "exact_arith",
    "factorize": "exact_arith",
    "moebius_tau": "exact_arith",
    "gcd_pow_k": "exact_arith",
    "crt_solve": "exact_arith",
    # kfree_core
    "SieveTable": "kfree_core",
    "build_sieve": "kfree_core",
    "save_sieve": "kfree_core",
    "load_sieve": "kfree_core",
    "load_or_build": "kfree_core",
    "cache_path": "kfree_core",
    "count_Ak": "kfree_core",
    "residual_E": "kfree_core",
    "j1_pair": "kfree_core",
    # local_densities
    "BoundedReal": "local_densities",
    "DensityValue": "local_densities",
    "rho_approx": "local_densities",
    "rho_cached": "local_densities",
    "f_factor": "local_densities",
    "h_local": "local_densities",
    "h_profile": "local_densities",
    "g_density": "local_densities",
    # gauss_local
    "gauss_H": "gauss_local",
    "gauss_G": "gauss_local",
    "h_norm": "gauss_local",
    "phi_counts": "gauss_local",
    "phi_table_rows": "gauss_local",
    "j_value": "gauss_local",
    "j_value_exact": "gauss_local",
    "delta_p": "gauss_local",
    "delta_p_cases": "gauss_local",
    "fourier_inversion_residual": "gauss_local",
    # singular_series
    "SingularValue": "singular_series",
    "sing_value": "singular_series",
    "base_constant": "singular_series",
    "two_adic_factor": "singular_series",
    "admissible_moduli": "singular_series",
    # variance_lab
    "VarianceStats": "variance_lab",
    "variance_stats": "variance_lab",
    "decomposition_residual": "variance_lab",
    "c1_truncated": "variance_lab",
    "delta_count": "variance_lab",
    "bound_new_shape": "variance_lab",
    "bound_old_shape": "variance_lab",
    "ScalingReport": "variance_lab",
    "scaling_report": "variance_lab",
    # circle_method
    "ArcParams": "circle_method",
    "s_alpha": "circle_method",
    "k_alpha": "circle_method",
    "i_beta": "circle_method",
    "s_star_delta": "circle_method",
    "arc_classify": "circle_method",
    "autocorr_identity": "circle_method",
    "l2_bound_shape": "circle_method",
    "l2_delta_report": "circle_method",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name: str):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(
            f"module {__name__!r} has no attribute {name!r}"
        ) from None
    value = getattr(importlib.import_module(f".{module_name}", __name__), name)
    globals()[name] = value
    return value


def __dir__() -> list[str]:
    return sorted(set(globals()) | set(_EXPORTS))
