######################################################################
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
######################################################################

"""
Log Handlers

This module contains utility functions to set up logging
consistently. Logs go to stderr; stdout carries machine output.
"""
import sys
import logging


def init_logging(logger_name: str = "droplet", level: int = logging.INFO) -> logging.Logger:
    """Set up logging for command line runs"""
    logger = logging.getLogger(logger_name)
    logger.propagate = False
    handler = logging.StreamHandler(sys.stderr)
    # Make all log formats consistent
    formatter = logging.Formatter("[%(asctime)s] [%(levelname)s] [%(module)s] %(message)s", "%Y-%m-%d %H:%M:%S %z")
    handler.setFormatter(formatter)
    logger.handlers = [handler]
    logger.setLevel(level)
    logger.info("Logging handler established")
    return logger
