#pragma once

// JSON field names used by scenario files, reports and event payloads.

#include <json.hpp>

#include "ngnqos/core_model.hpp"

namespace ngnqos {

void to_json(nlohmann::json& j, const QoSParameters& q);
/// Missing fields default to zero; unknown fields are rejected.
void from_json(const nlohmann::json& j, QoSParameters& q);

void to_json(nlohmann::json& j, const TrafficPattern& p);
void from_json(const nlohmann::json& j, TrafficPattern& p);

void to_json(nlohmann::json& j, const GateSetting& g);
void from_json(const nlohmann::json& j, GateSetting& g);

void to_json(nlohmann::json& j, TransportServiceClass c);
void from_json(const nlohmann::json& j, TransportServiceClass& c);

void to_json(nlohmann::json& j, MediaType m);
void from_json(const nlohmann::json& j, MediaType& m);

nlohmann::json class_mapping_to_json(const ClassMapping& mapping);
ClassMapping class_mapping_from_json(const nlohmann::json& j);

nlohmann::json dscp_table_to_json(const DscpTable& table);
DscpTable dscp_table_from_json(const nlohmann::json& j);

}  // namespace ngnqos
