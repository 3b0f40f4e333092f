#!/usr/bin/env python3
"""
Progress Observer Module

定义进度观察者的抽象接口和事件发布者，用于求解器与扫描的进度更新。
"""

from abc import ABC, abstractmethod
from typing import Iterable, List, Optional, Type
from types import TracebackType
from core.progress_events import ProgressEvent
from core.utils import build_logger

logger = build_logger(__name__)


class IProgressObserver(ABC):
    """进度观察者接口"""

    @abstractmethod
    def on_event(self, event: ProgressEvent) -> None:
        """
        处理进度事件 handler

        Args:
            event: 进度事件对象
        """

    def __enter__(self) -> 'IProgressObserver':
        """Start displaying; returns the observer itself. Observers without a display keep this."""
        return self

    def __exit__(self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType]
    ) -> Optional[bool]:
        """Stop displaying. Never suppresses the exception."""
        return None


class ProgressSubject:
    """
    进度事件发布者 (Subject)，负责发布事件

    管理观察者列表并发布事件到所有注册的观察者。A failing observer is logged and
    skipped; it never interrupts the computation that publishes the event.
    """

    def __init__(self, observers: Optional[Iterable[IProgressObserver]] = None):
        self._observers: List[IProgressObserver] = []
        for observer in observers or ():
            self.add_observer(observer)

    def add_observer(self, observer: IProgressObserver) -> None:
        """添加观察者"""
        if observer not in self._observers:
            self._observers.append(observer)

    def remove_observer(self, observer: IProgressObserver) -> None:
        """移除观察者"""
        if observer in self._observers:
            self._observers.remove(observer)

    def notify_observers(self, event: ProgressEvent) -> None:
        """通知所有观察者"""
        for observer in self._observers:
            try:
                observer.on_event(event)
            except Exception as e:
                # 避免单个观察者的错误影响求解
                logger.warning(f"Observer {observer.__class__.__name__} failed to handle event: {e}")

    def get_observer_count(self) -> int:
        """获取当前观察者数量"""
        return len(self._observers)
