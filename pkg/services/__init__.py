"""
Services package initialization
Every service is a class of static methods over the plain types in models/
"""
from .rule_engine import RuleEngine
from .loss_engine import LossEngine
from .data_service import DataService
from .metrics_service import MetricsService
from .client_engine import ClientEngine
from .server_engine import ServerEngine
from .report_service import ReportService
from .gradcheck_service import GradcheckService
from .experiment_service import ExperimentService

__all__ = [
    'RuleEngine', 'LossEngine', 'DataService', 'MetricsService', 'ClientEngine',
    'ServerEngine', 'ReportService', 'GradcheckService', 'ExperimentService'
]
