#!/usr/bin/env python3
"""
Progress Events Module

定义长时间数值搜索（种子网格求解、熵扫描）发布的进度事件，用于观察者模式的进度更新。

Every event carries the ``stage`` that produced it ("seeds", "families", "scan", ...)
so one observer can follow several consecutive stages of a single solve.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional
import time
from uuid import uuid4


@dataclass
class ProgressEvent:
    """基础进度事件类"""
    task_id: str
    stage: str = "solve"
    timestamp: float = field(default_factory=time.time)
    data: Dict[str, Any] = field(default_factory=dict)


class TaskStartedEvent(ProgressEvent):
    """阶段开始：``total`` 为该阶段的工作单元数（例如种子块数）"""

    def __init__(self, task_id: str, description: str, total: float, stage: str = "solve", **kwargs):
        super().__init__(task_id, stage, data=dict(description=description, total=total, **kwargs))

    @property
    def description(self) -> str:
        return self.data.get('description', 'Searching...')

    @property
    def total(self) -> float:
        return self.data.get('total', 1.0)


class ProgressAdvancedEvent(ProgressEvent):
    """进度推进事件; ``found`` counts solutions accepted so far in the stage"""

    def __init__(self, task_id: str, advance: float, stage: str = "solve",
                 found: Optional[int] = None, description: Optional[str] = None, **kwargs):
        super().__init__(task_id, stage, data=dict(advance=advance, found=found, description=description, **kwargs))

    @property
    def advance(self) -> float:
        return self.data.get('advance', 0.0)

    @property
    def found(self) -> Optional[int]:
        return self.data.get('found')

    @property
    def description(self) -> Optional[str]:
        return self.data.get('description')


class TaskFinishedEvent(ProgressEvent):
    """阶段完成事件"""

    def __init__(self, task_id: str, stage: str = "solve", description: Optional[str] = None,
                 success: bool = True, **kwargs):
        super().__init__(task_id, stage, data=dict(description=description, success=success, **kwargs))

    @property
    def description(self) -> Optional[str]:
        return self.data.get('description')

    @property
    def success(self) -> bool:
        return self.data.get('success', True)


class TaskErrorEvent(ProgressEvent):
    """阶段错误事件"""

    def __init__(self, task_id: str, error_message: str, stage: str = "solve", **kwargs):
        super().__init__(task_id, stage, data=dict(error_message=error_message, **kwargs))

    @property
    def error_message(self) -> str:
        return self.data.get('error_message', 'Unknown error')


def generate_task_id() -> str:
    """生成唯一的任务ID"""
    return str(uuid4())[:8]  # 使用UUID的前8位作为简短ID
