"""Package-level tests: imports, __all__, version."""

import unittest

import PyMBQC as mb


class TestPackage(unittest.TestCase):
    """Public API and metadata."""

    def test_version_is_string(self):
        self.assertIsInstance(mb.__version__, str)
        self.assertRegex(mb.__version__, r"^\d+\.\d+\.\d+$")

    def test_all_exports_resolve(self):
        for name in mb.__all__:
            self.assertTrue(hasattr(mb, name), name)

    def test_core_names_exported(self):
        for name in ("PauliString", "Tableau", "StateVector", "Graph", "GatePlan",
                     "post_measurement_expectation", "derive_pre_measurement_expression",
                     "gate_fidelity", "ExperimentConfig", "run_verify"):
            self.assertIn(name, mb.__all__)

    def test_errors_share_a_base(self):
        for error in (mb.DimensionError, mb.ContradictionError, mb.PlanError, mb.ConfigError,
                      mb.DenseSizeError, mb.StabilizerFormUnavailable):
            self.assertTrue(issubclass(error, mb.MBQCError))
        self.assertTrue(issubclass(mb.ConfigError, ValueError))
        self.assertTrue(issubclass(mb.DenseSizeError, MemoryError))

    def test_cli_entry_point(self):
        from PyMBQC.cli import main
        self.assertTrue(callable(main))
