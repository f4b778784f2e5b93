#pragma once

#include <sstream>
#include <string>

#include <json.hpp>

#include "grainstat/germgrain.hpp"

namespace grainstat::cli {

using nlohmann::json;

// JSON-lines encoding of realizations: one grain per line with germ, shape
// variant and parameters. Doubles round-trip exactly through nlohmann's
// shortest-representation printing.

inline json grain_to_json(const geom::Grain& g) {
    json j;
    const bool d3 = geom::shape_ambient_dim(g.shape) == 3;
    j["germ"] = d3 ? json::array({g.germ.x, g.germ.y, g.germ.z})
                   : json::array({g.germ.x, g.germ.y});
    if (const auto* s = std::get_if<geom::Segment>(&g.shape)) {
        j["shape"] = "segment";
        j["length"] = s->length;
        j["angle"] = s->angle;
    } else if (const auto* p = std::get_if<geom::Polyline>(&g.shape)) {
        j["shape"] = "polyline";
        json verts = json::array();
        for (const auto& v : p->vertices) verts.push_back(json::array({v.x, v.y}));
        j["vertices"] = verts;
    } else if (const auto* c = std::get_if<geom::Circle>(&g.shape)) {
        j["shape"] = "circle";
        j["radius"] = c->radius;
    } else if (const auto* d = std::get_if<geom::Disc>(&g.shape)) {
        j["shape"] = "disc";
        j["radius"] = d->radius;
    } else if (const auto* sp = std::get_if<geom::Sphere>(&g.shape)) {
        j["shape"] = "sphere";
        j["radius"] = sp->radius;
    } else {
        j["shape"] = "ball";
        j["radius"] = std::get<geom::Ball>(g.shape).radius;
    }
    return j;
}

inline geom::Grain grain_from_json(const json& j) {
    const auto& g = j.at("germ");
    const geom::Vec germ{g.at(0).get<double>(), g.at(1).get<double>(),
                         g.size() > 2 ? g.at(2).get<double>() : 0.0};
    const std::string kind = j.at("shape").get<std::string>();
    if (kind == "segment")
        return {germ, geom::Segment{j.at("length").get<double>(), j.at("angle").get<double>()}};
    if (kind == "polyline") {
        std::vector<geom::Vec> verts;
        for (const auto& v : j.at("vertices"))
            verts.push_back({v.at(0).get<double>(), v.at(1).get<double>(), 0.0});
        return {germ, geom::Polyline{std::move(verts)}};  // already centered when written
    }
    const double r = j.at("radius").get<double>();
    if (kind == "circle") return {germ, geom::Circle{r}};
    if (kind == "disc") return {germ, geom::Disc{r}};
    if (kind == "sphere") return {germ, geom::Sphere{r}};
    if (kind == "ball") return {germ, geom::Ball{r}};
    throw config_error("realization: unknown shape variant '" + kind + "'");
}

inline std::string realization_to_jsonl(const germgrain::Realization& real) {
    std::ostringstream out;
    for (const auto& g : real.grains) out << grain_to_json(g).dump() << '\n';
    return out.str();
}

inline germgrain::Realization realization_from_jsonl(const std::string& text) {
    germgrain::Realization real;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        real.grains.push_back(grain_from_json(json::parse(line)));
    }
    return real;
}

}  // namespace grainstat::cli
