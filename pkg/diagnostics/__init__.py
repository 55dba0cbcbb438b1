from .bench import BenchReport, run_bench
from .gradcheck_suite import SuiteReport, run_suite
