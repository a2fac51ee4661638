"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import itertools

from cli_helpers.tabular_output import TabularOutputFormatter


class Formatter:
    """Formatter instance is used to render experiment rows as terminal tables."""

    def __init__(self, settings):
        """A formatter can be customized by passing settings as a parameter."""
        self.settings = settings
        self.table_format = self.settings.table_format

        def format_value(val):
            if val is None:
                return self.settings.missingval
            if isinstance(val, float):
                return "%.4f" % val
            return str(val)

        def format_values(data, headers, **_):
            return ([[format_value(val) for val in row] for row in data]), headers

        self.output_kwargs = {
            "missing_value": self.settings.missingval,
            "preprocessors": (format_values,),
            "disable_numparse": True,
            "preserve_whitespace": True,
        }

    def format_output(self, rows, headers, title=None):
        """Format rows.

        :param rows: iterable of row sequences
        :param headers: column names
        :param title: optional line printed above the table
        :return: iterator over output lines
        """
        formatter = TabularOutputFormatter(format_name=self.table_format)
        output = formatter.format_output(list(rows), list(headers), **self.output_kwargs)
        if title:
            output = itertools.chain([title], output)
        return output

    def format_elbow(self, rows):
        return self.format_output(
            ([r.rho, r.empirical_self_corr, r.theoretical_self_corr] for r in rows),
            ["rho", "corr(X1, X1~)", "max(0, 2rho-1)"],
        )

    def format_verdicts(self, verdicts, tol):
        table = (
            [row.rho, row.empirical_self_corr, row.theoretical_self_corr,
             abs(row.empirical_self_corr - row.theoretical_self_corr), "PASS" if passed else "FAIL"]
            for row, passed in verdicts
        )
        return self.format_output(
            table,
            ["rho", "empirical", "theoretical", "abs error", "verdict"],
            title="corr(X1, X1~) = max(0, 2*corr(X1, X2) - 1), tolerance %g" % tol,
        )

    def format_rank_summary(self, summaries, max_features=3):
        """Mean ranks of the first max_features features per (scenario, rho, method)."""
        table = (
            [s.scenario, s.rho, s.method, s.feature, s.mean_rank, s.mean_importance, s.rejection_rate]
            for s in summaries
            if s.feature_index < max_features
        )
        return self.format_output(
            table, ["scenario", "rho", "method", "feature", "mean rank", "mean VI", "rejection rate"]
        )
