import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import LFSM_F1_1_F2_2
from ssmma.estimators import FlowComponentClassifier, FourComponentDecomposer
from ssmma.kernels import make_lfsm_periodic_concat


@pytest.fixture(scope="module")
def concat():
    return make_lfsm_periodic_concat()


def test_params_roundtrip():
    est = FlowComponentClassifier(n_x_nodes=4, pfsm_tol=1e-5)
    assert est.get_params()["pfsm_tol"] == 1e-5
    assert clone(est).get_params() == est.get_params()
    est.set_params(n_x_nodes=6)
    assert est.n_x_nodes == 6


def test_classifier_fit_predict(concat):
    est = FlowComponentClassifier(n_x_nodes=4).fit(concat)
    assert list(est.labels_) == ["fixed", "fixed", "cyclic", "cyclic"]
    assert list(est.predict([0.1, 1.9])) == ["fixed", "cyclic"]
    with pytest.raises(NotFittedError):
        FlowComponentClassifier().predict([0.1])


def test_decomposer_transform_reuses_classifier(concat):
    clf = FlowComponentClassifier(n_x_nodes=4).fit(concat)
    dec = FourComponentDecomposer(classifier=clf).fit(concat)
    out = dec.transform([((1.0,), (1.0,)), ((1.0, -1.0), (2.0, 1.0))])
    assert out.shape == (2, 4)
    assert out[0, 1] == pytest.approx(LFSM_F1_1_F2_2, rel=1e-7)
    assert out[0, 0] == 0.0 and out[0, 3] == 0.0
    assert dec.component_labels_[1] == "fixed"
    with pytest.raises(NotFittedError):
        FourComponentDecomposer().transform([((1.0,), (1.0,))])


def test_fit_transform_empty(concat):
    dec = FourComponentDecomposer(n_x_nodes=2)
    assert dec.fit(concat).transform([]).shape == (0, 4)
