import os
import yaml
import logging
import threading
from typing import Dict, Any, Optional, TYPE_CHECKING
from pathlib import Path

from core.errors import UsageError

if TYPE_CHECKING:
    from rich.console import Console

# Global shared console singleton
_shared_console = None
_console_lock = threading.Lock()

# 所有库模块的 logger 名称都以此为前缀
PACKAGE_LOGGER_PREFIX = "core"


def get_shared_console() -> Optional['Console']:
    """获取共享的 Rich Console 实例/singleton

    The console writes to stderr: stdout is reserved for machine-readable output.

    Returns:
        Rich Console 实例，如果 Rich 不可用则返回 None
    """
    global _shared_console
    if _shared_console is None:
        with _console_lock:    # make sure singleton
            if _shared_console is None:  # 双重检查锁定
                try:
                    from rich.console import Console
                    _shared_console = Console(stderr=True)
                except ImportError:
                    _shared_console = None
    return _shared_console


def build_logger(name: str = PACKAGE_LOGGER_PREFIX, level=logging.INFO, force_rich: Optional[bool] = None):
    """创建带有自动 Rich 支持的统一 logger

    All loggers share one Rich console so log lines and the search progress bars
    do not overwrite each other.

    Args:
        name: Logger name, usually the module's ``__name__``
        level: Logging level, defaults to INFO
        force_rich: 强制启用/禁用 Rich。None = 自动检测 (USE_RICH_LOGGING)

    Returns:
        配置好的 logger 实例
    """
    logger = logging.getLogger(name if name else __name__)

    # 如果已经有 handler，不要重复添加
    if logger.handlers:
        return logger

    use_rich = force_rich
    if use_rich is None:
        use_rich = os.environ.get('USE_RICH_LOGGING', 'true').lower() == 'true'

    if use_rich:
        shared_console = get_shared_console()
        if shared_console:
            try:
                from rich.logging import RichHandler
                handler = RichHandler(
                    console=shared_console,
                    rich_tracebacks=True,
                    show_time=True
                )
                # Rich 自己处理格式，只需要消息内容
                handler.setFormatter(logging.Formatter("%(message)s"))

                logger.addHandler(handler)
                logger.setLevel(level)
                logger.propagate = False
                return logger
            except ImportError:
                # Rich 导入失败，降级到标准日志
                pass

    # 标准日志配置（Rich 不可用或被禁用）
    handler = logging.StreamHandler()
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='[%X]'
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False

    return logger


def set_package_log_level(level: int) -> None:
    """Apply ``level`` to every logger created for the ``core`` package."""
    for name, candidate in logging.root.manager.loggerDict.items():
        if isinstance(candidate, logging.Logger) and (
            name == PACKAGE_LOGGER_PREFIX or name.startswith(PACKAGE_LOGGER_PREFIX + ".")
        ):
            candidate.setLevel(level)


def reset_shared_console():
    """重置共享 console（主要用于测试）"""
    global _shared_console
    with _console_lock:
        _shared_console = None


logger = build_logger(__name__)


class ConfigLoader:
    """
    Loads the YAML run configuration (``config_solver.yml``)

    Only the ``solver:`` section is interpreted; unknown top-level sections are kept
    in ``config`` for the caller.
    """
    def __init__(self, config_path: str):
        self.config_path = config_path
        self.config: Optional[Dict[str, Any]] = None

    def load_config(self) -> Dict[str, Any]:
        """
        Load configuration from the YAML file

        Returns:
            Dict containing the configuration

        Raises:
            UsageError: file missing, unreadable or not a YAML mapping
        """
        config_p = Path(self.config_path).expanduser()
        if not config_p.is_file():
            raise UsageError(f"Configuration file not found: {self.config_path}")

        try:
            with open(config_p, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise UsageError(f"Error loading configuration {self.config_path}: {e}") from e

        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise UsageError(f"Configuration {self.config_path} must be a mapping, got {type(loaded).__name__}")

        self.config = loaded
        logger.info(f"Configuration loaded from {self.config_path}")
        return self.config

    def solver_section(self) -> Dict[str, Any]:
        """
        Return the ``solver:`` mapping (empty when absent)
        """
        if self.config is None:
            self.load_config()
        section = self.config.get('solver', {}) or {}
        if not isinstance(section, dict):
            raise UsageError("The 'solver' section of the configuration must be a mapping")
        return section
