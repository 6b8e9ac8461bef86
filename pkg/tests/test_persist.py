import io
import json

import numpy as np
import pytest

from hrvsepsis.dataset import fit_standardizer, synth_dataset
from hrvsepsis.ensemble import SvmConfig, train_logistic_meta, train_svm_meta
from hrvsepsis.learners import GbmConfig, RfConfig, train_gbm, train_random_forest
from hrvsepsis.metrics import ThresholdedClassifier
from hrvsepsis.nnet import MlpConfig, train_mlp
from hrvsepsis.persist import (FeatureSubsetModel, ModelFormatError, StandardizedModel, load_model,
                               model_from_bytes, model_to_bytes, read_header, save_model)


@pytest.fixture(scope="module")
def data():
    return synth_dataset(150, 2, 3, seed=0)


def _models(d):
    X2 = d.features[:, :2]
    forest = train_random_forest(d, RfConfig(n_trees=5, max_depth=4, seed=1))
    gbm = train_gbm(d, GbmConfig(n_estimators=10, learning_rate=0.3))
    mlp, _ = train_mlp(d, None, MlpConfig(hidden_layers=2, units=4, epochs=2, batch_size=32))
    logit = train_logistic_meta(X2, d.labels)
    svm = train_svm_meta(X2, d.labels, SvmConfig())
    return {
        "forest": forest,
        "gbm": gbm,
        "mlp": mlp,
        "logistic": (logit, X2),
        "svm": (svm, X2),
        "thresholded": ThresholdedClassifier(gbm, 0.37, 2.0),
        "subset": FeatureSubsetModel(forest, tuple(range(5)), d.feature_names),
        "standardized": FeatureSubsetModel(
            StandardizedModel(mlp, fit_standardizer(d.features)), tuple(range(5)), d.feature_names),
    }


def test_round_trip_every_kind(data, tmp_path):
    for kind, m in _models(data).items():
        X = data.features
        if isinstance(m, tuple):
            m, X = m
        path = save_model(m, tmp_path / f"{kind}.npz")
        back = load_model(path)
        assert type(back) is type(m)
        np.testing.assert_array_equal(back.predict_proba(X), m.predict_proba(X))
        assert read_header(path)["format"] == "hrvsepsis-model"


def test_thresholded_keeps_cutoff(data):
    m = ThresholdedClassifier(train_gbm(data, GbmConfig(n_estimators=3)), 0.42, 0.5)
    back = model_from_bytes(model_to_bytes(m))
    assert back.threshold == 0.42 and back.beta_used == 0.5


def test_header_kind_and_config(data, tmp_path):
    gbm = train_gbm(data, GbmConfig(n_estimators=4, learning_rate=0.2))
    h = read_header(save_model(gbm, tmp_path / "g.npz"))
    assert h["kind"] == "gbm" and h["version"] == 1
    assert h["config"]["learning_rate"] == 0.2


def test_rejects_foreign_and_future_files(data, tmp_path):
    buf = io.BytesIO()
    np.savez(buf, x=np.zeros(3))
    with pytest.raises(ModelFormatError, match="header"):
        model_from_bytes(buf.getvalue())
    blob = model_to_bytes(train_gbm(data, GbmConfig(n_estimators=2)))
    with np.load(io.BytesIO(blob)) as z:
        arrays = {k: z[k] for k in z.files}
    h = json.loads(bytes(arrays["__header__"]).decode())
    h["version"] = 99
    arrays["__header__"] = np.frombuffer(json.dumps(h).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with pytest.raises(ModelFormatError, match="version"):
        model_from_bytes(buf.getvalue())
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "missing.npz")


def test_object_arrays_never_unpickled(tmp_path):
    p = tmp_path / "evil.npz"
    np.savez(p, __header__=np.array([{"a": 1}], dtype=object))
    with pytest.raises(ValueError):
        load_model(p)
