# Models package initialization
from models.tensor import ParamTensor, AdamWState, ParamRecord
from models.network import MlpSpec, VariantSpec, ModelParams, AlignerParams
from models.dataset import TabularDataset, ScalerParams, PartitionPlan
from models.memory_bank import MemoryBank
from models.loss_state import ClassWeights, KdSchedule, AlignConfig, AdaptiveWeights
from models.client import ClientState
from models.server import ServerState, SelectionConfig, RoundReport
from models.run_config import RunConfig

__all__ = [
    'ParamTensor', 'AdamWState', 'ParamRecord', 'MlpSpec', 'VariantSpec', 'ModelParams',
    'AlignerParams', 'TabularDataset', 'ScalerParams', 'PartitionPlan', 'MemoryBank',
    'ClassWeights', 'KdSchedule', 'AlignConfig', 'AdaptiveWeights', 'ClientState',
    'ServerState', 'SelectionConfig', 'RoundReport', 'RunConfig'
]
