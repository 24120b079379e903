"""Check Reporter - Collect residual checks and print the run summary"""

from typing import Any, Dict, List, Optional

from frechet_geo.utils.logger import setup_logger

logger = setup_logger(__name__)


class CheckReporter:
    """Check Reporter"""

    def __init__(self):
        self.checks: List[Dict[str, Any]] = []
        self.values: Dict[str, Any] = {}
        self.logger = logger

    def report_check(self, name: str, residual: float, tolerance: float) -> bool:
        """
        Record one residual check

        Args:
            name: Check name, e.g. "hessian_equivalence"
            residual: Measured residual
            tolerance: Pass threshold (residual <= tolerance)

        Returns:
            Whether the check passed
        """
        residual = float(residual)
        passed = residual <= tolerance
        self.checks.append({
            "name": name,
            "residual": residual,
            "tolerance": float(tolerance),
            "passed": passed,
        })
        if not passed:
            self.logger.warning(f"Check {name} failed: residual {residual:.3e} > {tolerance:.1e}")
        else:
            self.logger.debug(f"Check {name}: residual {residual:.3e}")
        return passed

    def record(self, key: str, value: Any):
        """Record a reported value that is not a pass/fail check (e.g. existence interval)"""
        self.values[key] = value

    @property
    def passed(self) -> bool:
        return all(check["passed"] for check in self.checks)

    def get_metrics(self) -> Dict[str, Any]:
        """
        Get run metrics

        Returns:
            {
                "total_checks": 4,
                "failed_checks": 0,
                "max_residuals": {"hessian_equivalence": 3.1e-07, ...},
                "passed": True
            }
        """
        max_residuals: Dict[str, float] = {}
        for check in self.checks:
            name = check["name"]
            max_residuals[name] = max(max_residuals.get(name, 0.0), check["residual"])

        return {
            "total_checks": len(self.checks),
            "failed_checks": sum(1 for check in self.checks if not check["passed"]),
            "max_residuals": max_residuals,
            "passed": self.passed,
        }

    def summary(self, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Metrics, recorded values and per-check detail in one mapping"""
        summary = dict(self.get_metrics())
        summary["values"] = dict(self.values)
        summary["checks"] = list(self.checks)
        if extra:
            summary.update(extra)
        return summary

    def print_summary(self):
        """
        Output CLI summary

        Example output:
        ⚠️  Failed: hessian_equivalence residual 2.0e-04 > tolerance 1.0e-05

        📊  Check Report:
        - Total checks: 3
        - Failed: 1
        - hessian_equivalence: max residual 2.0e-04
        """
        failed = [check for check in self.checks if not check["passed"]]
        for check in failed[:5]:
            print(f"⚠️  Failed: {check['name']} residual {check['residual']:.1e} "
                  f"> tolerance {check['tolerance']:.1e}")
        if len(failed) > 5:
            print(f"... and {len(failed) - 5} more failed check(s)")

        metrics = self.get_metrics()
        print("\n📊  Check Report:")
        print(f"- Total checks: {metrics['total_checks']}")
        print(f"- Failed: {metrics['failed_checks']}")
        for name, residual in metrics["max_residuals"].items():
            print(f"- {name}: max residual {residual:.3e}")
        for key, value in self.values.items():
            print(f"- {key}: {value}")
        print()
