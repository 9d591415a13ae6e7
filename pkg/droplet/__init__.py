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
Package: droplet
Moving boundary simulation and stability analysis of a sliding droplet

This module sets up logging for a run; the command handlers live in
droplet.scenarios and the command line in droplet.common.cli_commands.
"""
import logging
from typing import Optional
from droplet import config
from droplet.common import log_handlers


############################################################
# Initialize a run
############################################################
def create_app(level: Optional[int] = None) -> logging.Logger:
    """Initialize logging for a command run"""
    logger = log_handlers.init_logging("droplet", level if level is not None else config.LOGGING_LEVEL)

    logger.info(70 * "*")
    logger.info("  S L I D I N G   D R O P L E T  ".center(70, "*"))
    logger.info(70 * "*")

    logger.info("Simulator initialized!")

    return logger
