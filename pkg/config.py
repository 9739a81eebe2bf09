import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Base configuration class"""
    # Logging
    LOG_LEVEL = os.environ.get('SENTINEL_LOG_LEVEL') or 'INFO'
    LOG_FORMAT = os.environ.get('SENTINEL_LOG_FORMAT') or '%(asctime)s %(levelname)s %(name)s: %(message)s'

    # Execution
    DEFAULT_THREADS = int(os.environ.get('SENTINEL_THREADS') or 1)
    FLOAT_DTYPE = os.environ.get('SENTINEL_FLOAT_DTYPE') or 'float64'
    OUTPUT_DIR = os.environ.get('SENTINEL_OUTPUT_DIR') or 'runs'

    # Verification suite
    GRADCHECK_TRIALS = int(os.environ.get('SENTINEL_GRADCHECK_TRIALS') or 100)
    GRADCHECK_TOLERANCE = float(os.environ.get('SENTINEL_GRADCHECK_TOLERANCE') or 1e-4)


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = 'DEBUG'


class ProductionConfig(Config):
    """Long experiment runs"""
    LOG_LEVEL = 'INFO'


class TestingConfig(Config):
    """Testing configuration"""
    DEFAULT_THREADS = 1
    FLOAT_DTYPE = 'float64'
    OUTPUT_DIR = 'runs-test'


# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': ProductionConfig
}


def get_config(name=None):
    """Config class selected by name or by SENTINEL_ENV"""
    name = name or os.environ.get('SENTINEL_ENV') or 'default'
    return config.get(name, config['default'])
