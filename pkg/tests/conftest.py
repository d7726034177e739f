import json

import pytest

from dcr.gateway import GenerationSettings, make_mock


@pytest.fixture
def fast_settings():
    """Settings with negligible backoff so retry tests stay quick."""
    return GenerationSettings(max_retries=3, retry_backoff_s=0.001)


@pytest.fixture
def echo_backend():
    """Mock that answers a one-sentence evaluator exchange for candidate 'a.'."""
    dce = json.dumps(
        {
            "reason": [
                {
                    "sentence": "a.",
                    "reason": "This sentence is consistent with the article.",
                }
            ],
            "is_consistent": True,
        }
    )
    amc = json.dumps({"reason": ["positive"], "answer": [1]})
    return make_mock({"## Summary ##\na.\n": dce, '*"This sentence': amc})
