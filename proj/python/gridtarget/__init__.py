# Copyright 2026 The gridtarget Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the gridtarget C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
