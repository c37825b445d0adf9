import numpy as np
import pytest

from esigraph import solvers


@pytest.fixture(scope="session", autouse=True)
def _certificate_audit():
    """Record every l1 solve in the session and audit the certificates.

    Any solve performed with the production tolerance must end at
    kkt_residual <= 1e-8; tests that deliberately under-iterate wrap
    themselves in solvers.certificate_log_paused().
    """
    solvers.enable_certificate_log()
    yield
    bad = [
        r for r in solvers.certificate_log
        if not (r.kkt_residual <= 1e-8 and r.converged)
    ]
    solvers.disable_certificate_log()
    assert not bad, (
        f"{len(bad)} l1 solves finished without a 1e-8 KKT certificate; "
        f"worst residual {max(r.kkt_residual for r in bad):.3e}"
    )


@pytest.fixture(scope="session")
def small_mesh():
    from esigraph import build_two_hemisphere_mesh

    return build_two_hemisphere_mesh(1, 50.0, 110.0)  # 42 vertices per hemisphere


@pytest.fixture(scope="session")
def desk_mesh():
    from esigraph import build_two_hemisphere_mesh

    return build_two_hemisphere_mesh(2, 50.0, 110.0)  # 162 vertices per hemisphere
