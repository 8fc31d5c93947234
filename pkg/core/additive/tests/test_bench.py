import pytest

from additive.bench import default_form, run_benchmark
from additive.errors import InvalidArgumentError


def test_default_form():
    assert default_form(3).coeffs == (1, 1, -2)
    assert default_form(4).coeffs == (1, 1, 1, -3)
    with pytest.raises(InvalidArgumentError):
        default_form(2)


def test_benchmark_rows_agree():
    result = run_benchmark([8, 20], d=4, trials=1, seed=2)
    assert [row["N"] for row in result["rows"]] == [8, 20]
    assert all(row["relative_difference"] <= 1e-6 for row in result["rows"])
    assert result["coeffs"] == [1, 1, 1, -3]


@pytest.mark.parametrize("sizes,trials", [([], 1), ([7], 1), ([16], 0), ([12.5], 1)])
def test_benchmark_validation(sizes, trials):
    with pytest.raises(InvalidArgumentError):
        run_benchmark(sizes, trials=trials)


@pytest.mark.slow
def test_fourier_ratio_falls_with_size():
    result = run_benchmark([64, 256, 1024], d=3, trials=3, seed=0)
    assert result["ratio_decreasing"], [row["ratio"] for row in result["rows"]]
