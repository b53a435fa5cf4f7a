import pytest

from rgmpnn.bounds import SignalRegularity
from rgmpnn.kernels import RegularityProfile
from rgmpnn.mpnn import LayerConstants


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("RGMPNN_THREADS", raising=False)
    monkeypatch.delenv("RGMPNN_OUT_DIR", raising=False)


@pytest.fixture
def unit_profile():
    return RegularityProfile(sup_w=1.0, lip_w=0.0, d_min=1.0, dim_chi=2.0, zeta=1.0)


@pytest.fixture
def unit_layer():
    return LayerConstants(lip_phi=1.0, lip_psi=1.0, bias_phi=0.0, bias_psi=0.0)


@pytest.fixture
def unit_signal():
    return SignalRegularity(sup_f=1.0, lip_f=0.0)


@pytest.fixture
def rough_profile():
    """Lipschitz profile where every term of the bound chain is active."""
    return RegularityProfile(sup_w=1.0, lip_w=2.0, d_min=0.5, dim_chi=2.0, zeta=17.94)
