"""Generate-and-test composer: acceptance rules, budgets, determinism."""
import pytest

from quantone.composer import ComposeReport, ComposeRequest, compose
from quantone.corpus import Label
from quantone.grammar import GenConfig, parse
from quantone.learn import Model


def stubbed_compose(l0_value, request):
    """Run compose with predict_distribution forced to (l0, 1-l0)."""
    import quantone.composer as composer_module

    model = Model.initial(seed=0)
    original = composer_module.predict_distribution

    def forced(model, tokens, pipeline=None, **kwargs):
        return (l0_value, 1.0 - l0_value)

    composer_module.predict_distribution = forced
    try:
        return compose(model, request)
    finally:
        composer_module.predict_distribution = original


class TestCompose:
    def test_always_mel_accepts_immediately(self):
        request = ComposeRequest(target=Label.MEL, count=2, seed=0)
        report = stubbed_compose(1.0 - 1e-12, request)
        assert len(report.accepted) == 2
        assert not report.exhausted
        # duplicates are skipped, so attempts can exceed count slightly
        assert report.attempts >= 2

    def test_uniform_predictions_exhaust(self):
        request = ComposeRequest(target=Label.MEL, count=1, accept_margin=0.1,
                                 max_attempts=30, seed=0)
        report = stubbed_compose(0.5, request)
        assert report.accepted == ()
        assert report.exhausted
        assert report.attempts == 30

    def test_margin_filters_weak_predictions(self):
        request = ComposeRequest(target=Label.MEL, count=1, accept_margin=0.2,
                                 max_attempts=20, seed=0)
        # l0 = 0.62 matches MEL but misses the 0.5+0.2 margin
        report = stubbed_compose(0.62, request)
        assert report.accepted == ()

    def test_rit_target_uses_second_component(self):
        request = ComposeRequest(target=Label.RIT, count=1, accept_margin=0.1,
                                 max_attempts=20, seed=0)
        report = stubbed_compose(0.2, request)
        assert len(report.accepted) == 1
        _, l0 = report.accepted[0]
        assert l0 == pytest.approx(0.2)

    def test_accepted_sequences_parse(self):
        request = ComposeRequest(target=Label.MEL, count=3, seed=1,
                                 max_attempts=50)
        report = stubbed_compose(0.9, request)
        for tokens, _ in report.accepted:
            parse(tokens)

    def test_determinism(self):
        request = ComposeRequest(target=Label.MEL, count=2, seed=5,
                                 max_attempts=50)
        a = stubbed_compose(0.8, request)
        b = stubbed_compose(0.8, request)
        assert a == b

    def test_real_model_end_to_end(self):
        model = Model.initial(seed=0)
        request = ComposeRequest(target=Label.RIT, count=1, accept_margin=0.0,
                                 max_attempts=40, seed=3)
        report = compose(model, request)
        assert report.attempts <= 40
        for tokens, l0 in report.accepted:
            assert l0 <= 0.5

    def test_request_validation(self):
        with pytest.raises(ValueError):
            ComposeRequest(target=Label.UNK)
        with pytest.raises(ValueError):
            ComposeRequest(target=Label.MEL, count=0)
        with pytest.raises(ValueError):
            ComposeRequest(target=Label.MEL, accept_margin=0.9)
