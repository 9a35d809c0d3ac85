/*
 * Copyright 2026 The palign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PALIGN_PALIGN_HPP_
#define PALIGN_PALIGN_HPP_

#include "palign/alignment.hpp"
#include "palign/attribution.hpp"
#include "palign/data.hpp"
#include "palign/error.hpp"
#include "palign/eval.hpp"
#include "palign/image.hpp"
#include "palign/model.hpp"
#include "palign/parallel.hpp"
#include "palign/prior.hpp"
#include "palign/regions.hpp"
#include "palign/trainer.hpp"

#endif  // PALIGN_PALIGN_HPP_
