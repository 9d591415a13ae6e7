# Copyright 2024 The droplet-stability Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Module: error_handlers

Maps exceptions raised by a command run onto a machine readable payload
and a process exit status.
"""
import os
import json
import logging
from typing import Callable, Dict, Optional, Tuple, Type
from droplet.models import DataValidationError, NumericalError
from . import status

logger = logging.getLogger(__name__)

_HANDLERS: Dict[Type[BaseException], Callable] = {}


def errorhandler(exception_type: Type[BaseException]):
    """Registers the decorated function as the handler of exception_type"""

    def register(function: Callable) -> Callable:
        _HANDLERS[exception_type] = function
        return function

    return register


def _payload(code: int, error: str, message: str) -> dict:
    return {"status": code, "error": error, "message": message}


######################################################################
# Error Handlers
######################################################################
@errorhandler(DataValidationError)
def config_error(error):
    """Handles bad configuration or input data with EXIT_1_CONFIG_ERROR"""
    message = str(error)
    logger.warning(message)
    return (
        _payload(status.EXIT_1_CONFIG_ERROR, "Config Error", message),
        status.EXIT_1_CONFIG_ERROR,
    )


@errorhandler(NumericalError)
def numerical_failure(error):
    """Handles solver failures with EXIT_2_NUMERICAL_FAILURE"""
    message = str(error)
    logger.error("%s: %s", type(error).__name__, message)
    return (
        _payload(status.EXIT_2_NUMERICAL_FAILURE, type(error).__name__, message),
        status.EXIT_2_NUMERICAL_FAILURE,
    )


@errorhandler(Exception)
def internal_error(error):
    """Handles unexpected errors with EXIT_2_NUMERICAL_FAILURE"""
    message = str(error)
    logger.critical("Unexpected %s: %s", type(error).__name__, message)
    return (
        _payload(status.EXIT_2_NUMERICAL_FAILURE, "Internal Error", message),
        status.EXIT_2_NUMERICAL_FAILURE,
    )


def find_handler(error: BaseException) -> Callable:
    """Returns the handler registered for the closest class in the error's MRO"""
    for klass in type(error).__mro__:
        if klass in _HANDLERS:
            return _HANDLERS[klass]
    return internal_error


def handle_error(error: BaseException, out_dir: Optional[str] = None) -> Tuple[dict, int]:
    """Prints the error payload as JSON and writes error.json into out_dir when it exists

    :param error: the exception that ended the run
    :param out_dir: the artifact directory of the run, if any

    :return: the payload and the exit status
    :rtype: tuple

    """
    payload, code = find_handler(error)(error)
    text = json.dumps(payload, sort_keys=True)
    print(text)
    if out_dir and os.path.isdir(out_dir):
        with open(os.path.join(out_dir, "error.json"), "w", encoding="utf-8") as stream:
            stream.write(text + "\n")
    return payload, code
