import json

import numpy as np
import pytest

from signal_recovery.bundle import (
    ALPHA0_FILE,
    META_FILE,
    Y_FILE,
    InstanceMeta,
    read_instance_bundle,
    write_instance_bundle,
)
from signal_recovery.errors import InvariantViolation, MatrixFormatError
from signal_recovery.linalg import write_vector
from signal_recovery.model import (
    ProblemInstance,
    gen_gaussian_measurement,
    gen_noise,
    gen_paper_dictionary,
    gen_sparse_representation,
)
from signal_recovery.rng import RngStream, StreamPurpose


@pytest.fixture
def noisy_instance():
    stream = RngStream(42, 7)
    D = gen_paper_dictionary(8, stream.derive(StreamPurpose.DICTIONARY))
    M = gen_gaussian_measurement(5, 8, stream.derive(StreamPurpose.MEASUREMENT), normalized=True)
    alpha0 = gen_sparse_representation(D.n, 2, stream.derive(StreamPurpose.REPRESENTATION))
    e = gen_noise(5, 0.05, stream.derive(StreamPurpose.NOISE))
    return ProblemInstance.build(D, M, alpha0, e, epsilon=0.05)


def test_bundle_layout(tmp_path, noisy_instance):
    meta = InstanceMeta.describe(noisy_instance, 42, 7, dictionary="paper", measurement="gaussian")
    directory = write_instance_bundle(tmp_path / "inst", noisy_instance, meta)
    assert sorted(p.name for p in directory.iterdir()) == ["D.mat", "M.mat", "alpha0.vec", "meta.json", "y.vec"]
    stored = json.loads((directory / META_FILE).read_text())
    assert stored == {"d": 8, "n": 16, "m": 5, "k": 2, "epsilon": 0.05, "master_seed": 42, "stream_id": 7,
                      "generators": {"dictionary": "paper", "measurement": "gaussian"}}


def test_bundle_reload_preserves_instance(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    instance, meta = read_instance_bundle(tmp_path)
    np.testing.assert_array_equal(instance.D.matrix, noisy_instance.D.matrix)
    np.testing.assert_array_equal(instance.M.matrix, noisy_instance.M.matrix)
    np.testing.assert_array_equal(instance.y, noisy_instance.y)
    np.testing.assert_array_equal(instance.alpha0.densify(), noisy_instance.alpha0.densify())
    np.testing.assert_allclose(instance.e, noisy_instance.e, atol=1e-14)
    assert instance.epsilon == 0.05
    assert meta.k == 2
    assert meta.master_seed is None


def test_bundle_ignores_unknown_meta_keys(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    stored = json.loads((tmp_path / META_FILE).read_text())
    stored["comment"] = "hand edited"
    (tmp_path / META_FILE).write_text(json.dumps(stored))
    _, meta = read_instance_bundle(tmp_path)
    assert meta.d == 8


def test_bundle_invalid_meta(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    (tmp_path / META_FILE).write_text("{not json")
    with pytest.raises(MatrixFormatError, match="invalid metadata"):
        read_instance_bundle(tmp_path)


def test_bundle_inconsistent_shapes(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    write_vector(tmp_path / Y_FILE, np.zeros(4))
    with pytest.raises(MatrixFormatError, match="inconsistent"):
        read_instance_bundle(tmp_path)


def test_bundle_noise_beyond_epsilon(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    write_vector(tmp_path / Y_FILE, noisy_instance.y + 1.0)
    with pytest.raises(InvariantViolation):
        read_instance_bundle(tmp_path)


def test_bundle_missing_file(tmp_path, noisy_instance):
    write_instance_bundle(tmp_path, noisy_instance, InstanceMeta.describe(noisy_instance))
    (tmp_path / ALPHA0_FILE).unlink()
    with pytest.raises(OSError):
        read_instance_bundle(tmp_path)
