// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <duet/telecom.hpp>

#include <optional>
#include <string>

namespace duet::telecom::detail
{

const Json& phone(const WorldState& w);
Json& phone(WorldState& w);

std::optional<std::string> linked_line_id(const WorldState& w);
const Json& linked_line(const WorldState& w);
double remaining_data_gb(const WorldState& w, const Json& line);

void register_agent_tools(ToolRegistry& registry);
void register_user_tools(ToolRegistry& registry);
void register_inits(Domain& domain);
void register_assertions(Domain& domain);

} // namespace duet::telecom::detail
