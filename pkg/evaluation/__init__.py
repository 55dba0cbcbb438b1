from .error_maps import render_error_map, save_error_map
from .harness import DatasetReport, SampleReport, evaluate_dataset, write_report_json
from .metrics import MetricsReport, aggregate, aggregate_errors, angular_error_map, evaluate_pair
from .ranking import RankTable, avg_rank, generate_rank_report, rank_columns, read_rank_csv, write_ranked_csv
