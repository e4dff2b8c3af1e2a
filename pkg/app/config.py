"""
Application Configuration
=========================

Laboratory configuration: resource budgets, sampler layout, and logging,
with development, production and testing profiles. Values can be
overridden through environment variables or a local ``.env`` file.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name, default):
    value = os.environ.get(name)
    if value is None or value.strip() == '':
        return default
    return int(float(value))


class Config:
    """
    Base configuration class dengan settings default
    """

    ENV_NAME = 'base'
    DEBUG = False
    TESTING = False

    # Resource budgets
    MAX_TABLE_ENTRIES = _env_int('MULTAB_MAX_TABLE_ENTRIES', 10 ** 8)
    MAX_PARTITIONS = _env_int('MULTAB_MAX_PARTITIONS', 2 * 10 ** 8)
    BRUTE_FORCE_LIMIT = _env_int('MULTAB_BRUTE_LIMIT', 10 ** 7)
    BRUTE_T_MAX_N = 9
    MAX_TOTAL_DEGREE = _env_int('MULTAB_MAX_TOTAL_DEGREE', 24)
    MAX_FAMILY_SIZE = _env_int('MULTAB_MAX_FAMILY', 10 ** 6)
    MEMORY_HEADROOM = 0.8  # fraction of available RAM an SpfTable may take

    # Sieve / census tuning
    SIEVE_CHUNK_ROWS = 1 << 16
    EXACT_DEGREE_LIMIT = 64
    PRECISION_DPS = 50

    # Sampler
    SAMPLER_BLOCK_SIZE = 4096
    DEFAULT_SEED = 7

    # Parallelism
    THREADS = _env_int('MULTAB_THREADS', 1)

    # Logging settings
    LOG_LEVEL = os.environ.get('MULTAB_LOG_LEVEL', 'INFO')
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    ENABLE_FILE_LOGGING = False
    LOG_FILE = 'logs/multab.log'
    MAX_LOG_SIZE_MB = 10
    BACKUP_COUNT = 5

    @classmethod
    def as_dict(cls):
        """Upper-case settings as a plain dict."""
        return {key: getattr(cls, key) for key in dir(cls) if key.isupper()}


class DevelopmentConfig(Config):
    """
    Development environment configuration
    """
    ENV_NAME = 'development'
    DEBUG = True
    LOG_LEVEL = os.environ.get('MULTAB_LOG_LEVEL', 'INFO')


class ProductionConfig(Config):
    """
    Production environment configuration: long sweeps, file logging
    """
    ENV_NAME = 'production'
    ENABLE_FILE_LOGGING = True
    THREADS = _env_int('MULTAB_THREADS', os.cpu_count() or 1)


class TestingConfig(Config):
    """
    Testing environment configuration
    """
    ENV_NAME = 'testing'
    DEBUG = True
    TESTING = True
    LOG_LEVEL = 'WARNING'
    ENABLE_FILE_LOGGING = False

    # Smaller budgets so the resource paths can be exercised
    MAX_TABLE_ENTRIES = 2 * 10 ** 6
    MAX_PARTITIONS = 5 * 10 ** 6
    BRUTE_FORCE_LIMIT = 10 ** 6
    MAX_FAMILY_SIZE = 10 ** 5
    SAMPLER_BLOCK_SIZE = 1024


# Configuration dictionary untuk easy access
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(config_name=None):
    """
    Get configuration class berdasarkan environment

    Args:
        config_name (str): 'development', 'production' or 'testing'

    Returns:
        Config: Configuration class
    """
    if config_name is None:
        config_name = os.environ.get('MULTAB_ENV', 'default')

    return config.get(config_name, DevelopmentConfig)


def resolve_settings(config_obj=None):
    """
    Normalise a config class, instance, dict or None into a settings dict.
    """
    if config_obj is None:
        return get_config().as_dict()
    if isinstance(config_obj, dict):
        merged = get_config().as_dict()
        merged.update(config_obj)
        return merged
    if isinstance(config_obj, str):
        return get_config(config_obj).as_dict()
    return {key: getattr(config_obj, key) for key in dir(config_obj) if key.isupper()}
