/*
 * Copyright 2026 The lorajoint Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "lorajoint/core_model.hpp"
#include "lorajoint/assignment.hpp"
#include "lorajoint/capture.hpp"
#include "lorajoint/matching.hpp"
#include "lorajoint/feasibility.hpp"
#include "lorajoint/power_alloc.hpp"
#include "lorajoint/baselines.hpp"
#include "lorajoint/harness.hpp"
#include "lorajoint/validation.hpp"
#include "lorajoint/config.hpp"
