import pytest

truffle = pytest.importorskip("truffle")

from agent.main import AdditiveCountingTool  # noqa: E402


@pytest.fixture
def tool(monkeypatch):
    monkeypatch.setattr(truffle, "TruffleClient", lambda *args, **kwargs: None)
    return AdditiveCountingTool()


def test_tool_surface():
    for name in ("Spectrum", "Count", "Certify", "Transfer", "Examples", "Bench"):
        assert callable(getattr(AdditiveCountingTool, name))


def test_spectrum_tool_result(tool, write_function):
    result = tool.Spectrum(write_function([0.5] * 11), 3)
    assert result["success"] is True
    assert result["command"] == "spectrum"
    assert result["theta"] == pytest.approx(0.5)
    assert result["passed"] is True
    assert result["top_frequencies"][0] == 0


def test_count_tool_error(tool, write_function):
    result = tool.Count(write_function([0.5] * 11), "1,1,1")
    assert result["success"] is False
    assert result["input_error"] is True
    assert "error" in result and result["error"]
