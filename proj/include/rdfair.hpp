// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef RDFAIR_RDFAIR_HPP_
#define RDFAIR_RDFAIR_HPP_

#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"
#include "rdfair/coding_rate.hpp"
#include "rdfair/nn.hpp"
#include "rdfair/debias_trainer.hpp"
#include "rdfair/exemplar_select.hpp"
#include "rdfair/fairness_metrics.hpp"
#include "rdfair/data.hpp"
#include "rdfair/incremental_trainer.hpp"
#include "rdfair/config.hpp"
#include "rdfair/experiment.hpp"

#endif  // RDFAIR_RDFAIR_HPP_
