"""
Smoke test of the example entry point.
"""

from jumpsnakes.main import main


def test_main_runs(capsys):
    main()
    out = capsys.readouterr().out
    assert "Hello from jumpsnakes!" in out
    assert "lq_jump" in out
