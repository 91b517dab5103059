import pytest

from cimdse import build_config, data_dir, load_primitive


@pytest.fixture(scope="session")
def prim():
    return load_primitive(data_dir() / "primitives" / "sram6t-digital.json")


@pytest.fixture(scope="session")
def baseline_cfg():
    return build_config("baseline")


@pytest.fixture(scope="session")
def rf_cfg(prim):
    return build_config("cim_rf", prim)


@pytest.fixture(scope="session")
def smem_a_cfg(prim):
    return build_config("cim_smem_configA", prim)


@pytest.fixture(scope="session")
def smem_b_cfg(prim):
    return build_config("cim_smem_configB", prim)


@pytest.fixture(scope="session")
def all_cfgs(baseline_cfg, rf_cfg, smem_a_cfg, smem_b_cfg):
    return (baseline_cfg, rf_cfg, smem_a_cfg, smem_b_cfg)
