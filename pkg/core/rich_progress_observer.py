#!/usr/bin/env python3
"""
Rich Progress Observer Module

基于 Rich 库实现的进度条观察者，在共享控制台 (stderr) 上显示求解各阶段的进度。
"""

from typing import Dict, Optional
import threading
from core.progress_observer import IProgressObserver
from core.progress_events import (
    ProgressEvent, TaskStartedEvent, ProgressAdvancedEvent,
    TaskFinishedEvent, TaskErrorEvent
)
from core.utils import build_logger, get_shared_console

logger = build_logger(__name__)

# 尝试导入 Rich 库
try:
    from rich.progress import (
        Progress, TextColumn, BarColumn, TaskProgressColumn,
        TimeRemainingColumn, TimeElapsedColumn, TaskID
    )
    from rich.console import Console
    from rich.table import Column
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False
    logger.warning("Rich library not available. Progress display will be disabled.")


class RichProgressObserver(IProgressObserver):
    """
    基于 Rich 库的进度条观察者

    One bar per stage task; the bar description shows the running solution count.
    """

    def __init__(self, console: Optional['Console'] = None):
        """
        Args:
            console: Rich Console 实例，默认使用共享控制台
        """
        if not RICH_AVAILABLE:
            raise ImportError("Rich library is required for RichProgressObserver")

        self._console = console or get_shared_console()
        self._rich_task_map: Dict[str, 'TaskID'] = {}  # 映射任务ID到Rich TaskID
        self._descriptions: Dict[str, str] = {}
        self._lock = threading.Lock()
        self._progress = Progress(
            TextColumn("[bold blue]{task.description}", table_column=Column(overflow="fold")),
            BarColumn(),
            TaskProgressColumn(),
            TimeElapsedColumn(),
            TimeRemainingColumn(),
            console=self._console,
            transient=False,
        )

    @property
    def progress(self) -> 'Progress':
        return self._progress

    def __enter__(self):
        self._progress.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._progress.stop()
        return False

    def on_event(self, event: ProgressEvent) -> None:
        with self._lock:
            if isinstance(event, TaskStartedEvent):
                self._descriptions[event.task_id] = event.description
                self._rich_task_map[event.task_id] = self._progress.add_task(
                    description=event.description, total=event.total
                )
            elif isinstance(event, ProgressAdvancedEvent):
                rich_task_id = self._rich_task_map.get(event.task_id)
                if rich_task_id is None:
                    logger.debug(f"Progress advance for unknown task ID: {event.task_id}")
                    return
                description = event.description or self._descriptions[event.task_id]
                if event.found is not None:
                    description = f"{description} ({event.found} found)"
                self._progress.update(rich_task_id, advance=event.advance, description=description)
            elif isinstance(event, TaskFinishedEvent):
                rich_task_id = self._rich_task_map.pop(event.task_id, None)
                if rich_task_id is not None:
                    task = self._progress.tasks[rich_task_id]
                    self._progress.update(
                        rich_task_id,
                        completed=task.total,
                        description=event.description or (task.description + " [green]✓ Done"),
                    )
            elif isinstance(event, TaskErrorEvent):
                rich_task_id = self._rich_task_map.pop(event.task_id, None)
                if rich_task_id is not None:
                    task = self._progress.tasks[rich_task_id]
                    self._progress.update(rich_task_id, description=task.description + " [red]✗ Error")
                logger.error(f"Stage '{event.stage}' failed: {event.error_message}")

    def get_active_task_count(self) -> int:
        """获取当前活跃任务数量"""
        with self._lock:
            return len(self._rich_task_map)


class SimpleFallbackObserver(IProgressObserver):
    """
    后备观察者，在 Rich 不可用或未请求进度条时使用

    Writes stage boundaries to the log; per-chunk advances go to DEBUG.
    """

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        return False

    def on_event(self, event: ProgressEvent) -> None:
        if isinstance(event, TaskStartedEvent):
            logger.info(f"[{event.stage}] {event.description} (total: {event.total:g})")
        elif isinstance(event, ProgressAdvancedEvent):
            logger.debug(f"[{event.stage}] +{event.advance:g} (found: {event.found})")
        elif isinstance(event, TaskFinishedEvent):
            status = "done" if event.success else "failed"
            logger.info(f"[{event.stage}] {event.description or status}")
        elif isinstance(event, TaskErrorEvent):
            logger.error(f"[{event.stage}] {event.error_message}")


def create_progress_observer(use_rich: bool = True, console: Optional['Console'] = None) -> IProgressObserver:
    """
    工厂函数：创建适当的进度 observer

    Args:
        use_rich: 是否尝试使用 Rich 进度条
        console: Rich Console 实例

    Returns:
        IProgressObserver 实例
    """
    if use_rich and RICH_AVAILABLE:
        return RichProgressObserver(console=console)
    if use_rich:
        logger.warning("Using fallback progress observer (log lines)")
    return SimpleFallbackObserver()
