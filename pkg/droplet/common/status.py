# coding: utf8
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
Descriptive process exit codes, for code readability.
"""

# Success
EXIT_0_OK = 0

# Bad input - configuration, flags, shape files
EXIT_1_CONFIG_ERROR = 1

# Numerical failure - solver errors, halted runs, failed validation checks
EXIT_2_NUMERICAL_FAILURE = 2
