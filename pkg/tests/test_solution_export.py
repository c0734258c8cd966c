"""
Tests for the CSV export of solved grid processes.
"""

import numpy as np

from jumpsnakes.fbsolve.export import solution_table, write_solution_csv
from jumpsnakes.fbsolve.picard import picard_solve


class TestSolutionExport:
    def test_table_layout(self, lq_problem, lq_noise, oracle_control):
        sol = picard_solve(lq_problem, oracle_control(lq_problem, lq_noise), lq_noise)
        header, rows = solution_table(sol, max_paths=3)
        assert header == ["path", "step", "t", "X", "Y", "Zbar", "Ztilde_0"]
        assert rows.shape == (3 * 41, 7)
        np.testing.assert_array_equal(rows[:41, 0], 0)
        np.testing.assert_array_equal(rows[:41, 1], np.arange(41))
        np.testing.assert_allclose(rows[41:82, 3], sol.X[1])
        # no Z at the last knot
        assert np.isnan(rows[40, 5]) and np.isnan(rows[40, 6])
        assert not np.isnan(rows[39, 5])

    def test_write_and_read_back(self, tmp_path, lq_problem, lq_noise, oracle_control):
        sol = picard_solve(lq_problem, oracle_control(lq_problem, lq_noise), lq_noise)
        path = write_solution_csv(sol, tmp_path / "out" / "solution.csv", max_paths=2)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "path,step,t,X,Y,Zbar,Ztilde_0"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (82, 7)
        np.testing.assert_array_equal(data[:41, 4], sol.Y[0])
