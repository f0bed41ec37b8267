// SPDX-License-Identifier: Apache-2.0
#include "telecom_internal.hpp"

#include <array>
#include <map>

namespace duet::telecom::detail
{

namespace
{

using OrderedJson = nlohmann::ordered_json;

// Field order used when printing records, matching what CRM screens show.
const std::map<std::string, std::vector<std::string>, std::less<>>& field_orders()
{
    static const std::map<std::string, std::vector<std::string>, std::less<>> orders {
        {"customer",
         {"customer_id", "full_name", "date_of_birth", "email", "phone_number", "address", "account_status",
          "payment_methods", "line_ids", "bill_ids", "created_at", "last_extension_date",
          "goodwill_credit_used_this_year"}},
        {"address", {"street", "city", "state", "zip_code"}},
        {"payment_method", {"method_type", "account_number_last_4", "expiration_date"}},
        {"line",
         {"line_id", "phone_number", "status", "plan_id", "device_id", "data_used_gb", "data_refueling_gb",
          "roaming_enabled", "contract_end_date", "last_plan_change_date", "last_sim_replacement_date",
          "suspension_start_date"}},
        {"device",
         {"device_id", "device_type", "model", "imei", "is_esim_capable", "activated", "activation_date",
          "last_esim_transfer_date"}},
        {"plan", {"plan_id", "name", "data_limit_gb", "price", "mms_included"}},
        {"bill", {"bill_id", "customer_id", "amount_due", "due_date", "status", "dispute_status"}},
    };
    return orders;
}

OrderedJson ordered(const Json& record, std::string_view kind)
{
    OrderedJson out = OrderedJson::object();
    const auto& order = field_orders().find(kind)->second;
    for (const auto& key: order)
    {
        if (!record.contains(key))
            continue;
        const auto& v = record.at(key);
        if (key == "address")
            out[key] = ordered(v, "address");
        else if (key == "payment_methods")
        {
            out[key] = OrderedJson::array();
            for (const auto& pm: v)
                out[key].push_back(ordered(pm, "payment_method"));
        }
        else
            out[key] = OrderedJson::parse(v.dump());
    }
    for (const auto& [key, v]: record.items())
        if (!out.contains(key))
            out[key] = OrderedJson::parse(v.dump());
    return out;
}

std::string show(const Json& record, std::string_view kind)
{
    return ordered(record, kind).dump(4);
}

ToolSpec agent_tool(std::string name, std::string doc, std::vector<ParamSpec> params)
{
    return {std::move(name), PlayerId::agent, ToolKind::read, std::move(params), std::move(doc)};
}

ParamSpec str_param(std::string name, std::string description)
{
    return {std::move(name), ParamType::string, true, std::move(description)};
}

const Json* find_customer(const WorldState& w, std::string_view id)
{
    const auto& customers = w.agent_db.at("customers");
    auto it = customers.find(std::string(id));
    return it == customers.end() ? nullptr : &*it;
}

bool owns_line(const Json& customer, std::string_view line_id)
{
    for (const auto& id: customer.at("line_ids"))
        if (id == line_id)
            return true;
    return false;
}

// Resolves a (customer, line) pair or explains why it does not resolve.
std::optional<std::string> check_ownership(const WorldState& w, const Json& args)
{
    const auto customer_id = args.at("customer_id").get<std::string>();
    const auto line_id = args.at("line_id").get<std::string>();
    const auto* customer = find_customer(w, customer_id);
    if (!customer)
        return "customer not found: " + customer_id;
    if (!w.agent_db.at("lines").contains(line_id))
        return "line not found: " + line_id;
    if (!owns_line(*customer, line_id))
        return "line " + line_id + " does not belong to customer " + customer_id;
    return std::nullopt;
}

bool has_overdue_bill(const WorldState& w, const Json& customer)
{
    for (const auto& bill_id: customer.at("bill_ids"))
    {
        const auto& bills = w.agent_db.at("bills");
        auto it = bills.find(bill_id.get<std::string>());
        if (it != bills.end() && it->at("status") == "Overdue")
            return true;
    }
    return false;
}

std::string customer_of_line(const WorldState& w, std::string_view line_id)
{
    for (const auto& [id, c]: w.agent_db.at("customers").items())
        if (owns_line(c, line_id))
            return id;
    return {};
}

// Why `action` cannot be performed on the line, or nullopt when it can.
std::optional<std::string> ineligibility(const WorldState& w, const Json& line, std::string_view action)
{
    const auto status = line.at("status").get<std::string>();
    if (status == "Closed")
        return "line is closed";
    if (action == "resume")
    {
        if (status != "Suspended")
            return "line is not suspended";
        if (line.at("contract_end_date").get<std::string>() < kToday)
            return "contract has ended; renewal requires a human agent";
        const auto* customer = find_customer(w, customer_of_line(w, line.at("line_id").get<std::string>()));
        if (customer && has_overdue_bill(w, *customer))
            return "customer has overdue bills";
        return std::nullopt;
    }
    if (action == "suspend")
        return status == "Active" ? std::nullopt : std::optional<std::string>("line is not active");
    if (action == "roaming" || action == "refuel")
        return std::nullopt;
    return "unknown action '" + std::string(action) + "'";
}

} // namespace

void register_agent_tools(ToolRegistry& registry)
{
    registry.add_read(agent_tool("get_customer_by_phone", "Look up a customer by their primary phone number.",
                                 {str_param("phone_number", "Phone number in the form 555-123-4567.")}),
                      [](const WorldState& w, const Json& args) {
                          const auto number = args.at("phone_number").get<std::string>();
                          if (number.empty())
                              return ToolOutcome::invalid("phone_number must not be empty");
                          for (const auto& [id, c]: w.agent_db.at("customers").items())
                              if (c.at("phone_number") == number)
                                  return ToolOutcome::ok(show(c, "customer"));
                          return ToolOutcome::error("customer not found");
                      });

    registry.add_read(agent_tool("get_customer_by_id", "Look up a customer by customer ID.",
                                 {str_param("customer_id", "Customer ID, e.g. C1001.")}),
                      [](const WorldState& w, const Json& args) {
                          const auto* c = find_customer(w, args.at("customer_id").get<std::string>());
                          return c ? ToolOutcome::ok(show(*c, "customer")) : ToolOutcome::error("customer not found");
                      });

    registry.add_read(agent_tool("get_customer_by_name_dob", "Look up a customer by full name and date of birth.",
                                 {str_param("full_name", "Customer full name."),
                                  str_param("date_of_birth", "Date of birth, YYYY-MM-DD.")}),
                      [](const WorldState& w, const Json& args) {
                          for (const auto& [id, c]: w.agent_db.at("customers").items())
                              if (c.at("full_name") == args.at("full_name") && c.at("date_of_birth") == args.at("date_of_birth"))
                                  return ToolOutcome::ok(show(c, "customer"));
                          return ToolOutcome::error("customer not found");
                      });

    registry.add_read(
        agent_tool("get_details_by_id", "Fetch a line (L...), device (D...), plan (P...) or bill (B...) by ID.",
                   {str_param("id", "Entity ID.")}),
        [](const WorldState& w, const Json& args) {
            const auto id = args.at("id").get<std::string>();
            static const std::array<std::pair<char, std::pair<const char*, const char*>>, 4> tables {{
                {'L', {"lines", "line"}},
                {'D', {"devices", "device"}},
                {'P', {"plans", "plan"}},
                {'B', {"bills", "bill"}},
            }};
            for (const auto& [prefix, table]: tables)
            {
                if (id.empty() || id[0] != prefix)
                    continue;
                const auto& rows = w.agent_db.at(table.first);
                auto it = rows.find(id);
                if (it == rows.end())
                    return ToolOutcome::error(std::string(table.second) + " not found: " + id);
                return ToolOutcome::ok(show(*it, table.second));
            }
            return ToolOutcome::error("unknown id prefix: " + id);
        });

    registry.add_read(agent_tool("get_bills_for_customer", "List all bills of a customer.",
                                 {str_param("customer_id", "Customer ID.")}),
                      [](const WorldState& w, const Json& args) {
                          const auto* c = find_customer(w, args.at("customer_id").get<std::string>());
                          if (!c)
                              return ToolOutcome::error("customer not found");
                          OrderedJson out = OrderedJson::array();
                          for (const auto& bill_id: c->at("bill_ids"))
                              out.push_back(ordered(w.agent_db.at("bills").at(bill_id.get<std::string>()), "bill"));
                          return ToolOutcome::ok(out.dump(4));
                      });

    registry.add_read(agent_tool("get_data_usage", "Data usage, allowance and refuelled data for a line.",
                                 {str_param("line_id", "Line ID.")}),
                      [](const WorldState& w, const Json& args) {
                          const auto line_id = args.at("line_id").get<std::string>();
                          const auto& lines = w.agent_db.at("lines");
                          auto it = lines.find(line_id);
                          if (it == lines.end())
                              return ToolOutcome::error("line not found: " + line_id);
                          const auto& plan = w.agent_db.at("plans").at(it->at("plan_id").get<std::string>());
                          OrderedJson out;
                          out["line_id"] = line_id;
                          out["data_used_gb"] = it->at("data_used_gb").get<double>();
                          out["data_limit_gb"] = plan.at("data_limit_gb").get<double>();
                          out["data_refueling_gb"] = it->at("data_refueling_gb").get<double>();
                          out["remaining_gb"] = remaining_data_gb(w, *it);
                          return ToolOutcome::ok(out.dump(4));
                      });

    registry.add_read(
        agent_tool("check_line_eligibility", "Check whether an action (resume, suspend, roaming, refuel) is allowed on a line.",
                   {str_param("line_id", "Line ID."), str_param("action", "One of resume, suspend, roaming, refuel.")}),
        [](const WorldState& w, const Json& args) {
            const auto line_id = args.at("line_id").get<std::string>();
            const auto action = args.at("action").get<std::string>();
            const auto& lines = w.agent_db.at("lines");
            auto it = lines.find(line_id);
            if (it == lines.end())
                return ToolOutcome::error("line not found: " + line_id);
            if (action != "resume" && action != "suspend" && action != "roaming" && action != "refuel")
                return ToolOutcome::invalid("action must be one of resume, suspend, roaming, refuel");
            auto why = ineligibility(w, *it, action);
            return ToolOutcome::ok(why ? "Not eligible: " + *why : "Eligible");
        });

    auto writer = [](std::string name, std::string doc, std::vector<ParamSpec> params) {
        auto spec = agent_tool(std::move(name), std::move(doc), std::move(params));
        spec.kind = ToolKind::write;
        return spec;
    };
    const ParamSpec customer_param = str_param("customer_id", "Customer ID.");
    const ParamSpec line_param = str_param("line_id", "Line ID.");

    auto set_roaming = [](bool enable) {
        return [enable](WorldState& w, const Json& args) {
            if (auto err = check_ownership(w, args))
                return ToolOutcome::error(*err);
            auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
            if (line.at("status") == "Closed")
                return ToolOutcome::error("line is closed");
            const auto verb = enable ? std::string("enabled") : std::string("disabled");
            if (line.at("roaming_enabled").get<bool>() == enable)
                return ToolOutcome::ok("Roaming is already " + verb + " for line " + line.at("line_id").get<std::string>() + ".");
            line["roaming_enabled"] = enable;
            return ToolOutcome::ok("Roaming " + verb + " for line " + line.at("line_id").get<std::string>() + ".");
        };
    };

    registry.add_write(writer("enable_roaming", "Enable international roaming on a customer's line.", {customer_param, line_param}),
                       set_roaming(true));
    registry.add_write(writer("disable_roaming", "Disable international roaming on a customer's line.", {customer_param, line_param}),
                       set_roaming(false));

    registry.add_write(
        writer("refuel_data", "Add extra data (in GB) to a customer's line for the current cycle.",
               {customer_param, line_param, {"gb", ParamType::number, true, "Amount of data to add, in GB."}}),
        [](WorldState& w, const Json& args) {
            const double gb = args.at("gb").get<double>();
            if (!(gb > 0.0))
                return ToolOutcome::invalid("gb must be positive");
            if (auto err = check_ownership(w, args))
                return ToolOutcome::error(*err);
            auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
            if (line.at("status") == "Closed")
                return ToolOutcome::error("line is closed");
            line["data_refueling_gb"] = line.at("data_refueling_gb").get<double>() + gb;
            OrderedJson out;
            out["message"] = "Data refuelled successfully.";
            out["line_id"] = line.at("line_id");
            out["data_refueling_gb"] = line.at("data_refueling_gb").get<double>();
            out["remaining_gb"] = remaining_data_gb(w, line);
            return ToolOutcome::ok(out.dump(4));
        });

    registry.add_write(writer("suspend_line", "Suspend an active line.",
                              {customer_param, line_param, str_param("reason", "Reason for the suspension.")}),
                       [](WorldState& w, const Json& args) {
                           if (auto err = check_ownership(w, args))
                               return ToolOutcome::error(*err);
                           auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
                           if (auto why = ineligibility(w, line, "suspend"))
                               return ToolOutcome::error("cannot suspend: " + *why);
                           line["status"] = "Suspended";
                           line["suspension_start_date"] = kToday;
                           return ToolOutcome::ok("Line " + line.at("line_id").get<std::string>() + " suspended.");
                       });

    registry.add_write(writer("resume_line", "Resume a suspended line.", {customer_param, line_param}),
                       [](WorldState& w, const Json& args) {
                           if (auto err = check_ownership(w, args))
                               return ToolOutcome::error(*err);
                           auto& line = w.agent_db.at("lines").at(args.at("line_id").get<std::string>());
                           if (auto why = ineligibility(w, line, "resume"))
                               return ToolOutcome::error("cannot resume: " + *why);
                           line["status"] = "Active";
                           line["suspension_start_date"] = nullptr;
                           return ToolOutcome::ok("Line " + line.at("line_id").get<std::string>() + " resumed.");
                       });

    registry.add_write(writer("transfer_to_human", "Transfer the customer to a human agent, with a summary of the issue.",
                              {str_param("summary", "Short summary of the issue for the human agent.")}),
                       [](WorldState& w, const Json& args) {
                           auto& transfers = w.agent_db["transfers"];
                           transfers.push_back({{"summary", args.at("summary")}});
                           return ToolOutcome::ok("Transfer successful.");
                       });
}

} // namespace duet::telecom::detail
