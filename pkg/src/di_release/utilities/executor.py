"""Collect `.ReleaseError` instances from several executed functions.

.. autolink-preface::
    from di_release.errors import ReleaseError
    from di_release.utilities.executor import Executor
"""

from __future__ import annotations

import inspect
import logging
import operator
import os
import sys
import time
from contextlib import AbstractContextManager
from typing import TYPE_CHECKING, Callable, ParamSpec, TypeVar

from di_release.errors import ReleaseError

if TYPE_CHECKING:
    from types import TracebackType

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

_LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
P = ParamSpec("P")

DEBUG_VARIABLE = "DI_RELEASE_DEBUG"
"""Set this environment variable to log the execution time of every call."""


class Executor(AbstractContextManager):
    r"""Execute functions and collect any `.ReleaseError` exceptions.

    The `Executor` is a context manager that sequentially executes functions, for
    instance the points of a :math:`\lambda` sweep, and collects any `.ReleaseError`
    they raise. The collected messages are merged and re-raised as a new
    `.ReleaseError` when the context manager exits.

    To avoid raising the exception, set the :code:`raise_exception` argument to
    `False`. The merged message is then logged as an error instead.

    >>> def fail(message: str) -> None:
    ...     raise ReleaseError(message)
    >>> with Executor(raise_exception=False) as execute:
    ...     execute(fail, "Point 1 diverged")
    ...     execute(fail, "Point 2 diverged")
    ...     execute(abs, -2)
    2
    >>> execute.error_messages
    ('Point 1 diverged', 'Point 2 diverged')

    .. automethod:: __call__
    """

    def __init__(self, raise_exception: bool = True) -> None:
        self.__raise_exception = raise_exception
        self.__error_messages: list[str] = []
        self.__is_in_context = False
        self.__execution_times: dict[str, float] = {}

    @property
    def error_messages(self) -> tuple[str, ...]:
        """View the collected error messages.

        .. note::
            Set :code:`DI_RELEASE_DEBUG=1` to enable profiling the execution times.
        """
        return tuple(self.__error_messages)

    def __call__(
        self, function: Callable[P, T], *args: P.args, **kwargs: P.kwargs
    ) -> T | None:
        """Execute a function and collect any `.ReleaseError` exceptions."""
        if not self.__is_in_context:
            msg = "The __call__ method can only be used within a context manager."
            raise RuntimeError(msg)
        try:
            if os.getenv(DEBUG_VARIABLE) not in {None, "0"}:
                start_time = time.time()
                result = function(*args, **kwargs)
                end_time = time.time()
                self.__execution_times[_describe(function)] = end_time - start_time
            else:
                result = function(*args, **kwargs)
        except ReleaseError as exception:
            error_message = str("\n".join(map(str, exception.args)))
            _LOGGER.debug("Collected error: %s", error_message)
            self.__error_messages.append(error_message)
            return None
        else:
            return result

    def __enter__(self) -> Self:
        self.__is_in_context = True
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        tb: TracebackType | None,
    ) -> bool:
        if exc_type is not None and not issubclass(exc_type, ReleaseError):
            return False
        if isinstance(exc_value, ReleaseError):
            self.__error_messages.append(str("\n".join(map(str, exc_value.args))))
        error_msg = self.merge_messages()
        if os.getenv(DEBUG_VARIABLE) not in {None, "0"}:
            self.log_execution_times()
        if error_msg:
            if self.__raise_exception:
                raise ReleaseError(error_msg)
            _LOGGER.error(error_msg)
        return True

    def merge_messages(self) -> str:
        stripped_messages = (s.strip() for s in self.__error_messages)
        return "\n--------------------\n".join(stripped_messages)

    def log_execution_times(self) -> None:
        total_time = sum(self.__execution_times.values())
        _LOGGER.info("Total execution time: %.2f s", total_time)
        sorted_times = sorted(
            self.__execution_times.items(), key=operator.itemgetter(1), reverse=True
        )
        for function_name, sub_time in sorted_times:
            _LOGGER.info("%7.2f s  %s", sub_time, function_name)


def _describe(function: Callable) -> str:
    try:
        source_file = inspect.getsourcefile(function)
        line_number = inspect.getsourcelines(function)[1]
    except (OSError, TypeError):
        return getattr(function, "__qualname__", repr(function))
    return f"{source_file}:{line_number} ({function.__name__})"
