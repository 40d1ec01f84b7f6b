/*
 * Copyright 2026 the tcpsim authors
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

#define TCPSIM_VERSION "0.1.0"

#include "tcpsim/engine.hpp"
#include "tcpsim/packet.hpp"
#include "tcpsim/trace.hpp"
#include "tcpsim/netmodel.hpp"
#include "tcpsim/tcp.hpp"
#include "tcpsim/traffic.hpp"
#include "tcpsim/metrics.hpp"
#include "tcpsim/scenario.hpp"
#include "tcpsim/config_text.hpp"
#include "tcpsim/svg.hpp"
