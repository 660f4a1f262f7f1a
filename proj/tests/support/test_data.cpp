#include "test_data.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relsynth/io.hpp"
#include "relsynth/tensor.hpp"

namespace testdata {

using namespace relsynth;

RelationalDataset tiny_pair() {
    TableData users;
    users.name = "users";
    users.attributes = {{"uid", AttributeKind::Identifier, true},
                        {"age", AttributeKind::Numeric, false},
                        {"tier", AttributeKind::Categorical, false},
                        {"joined", AttributeKind::DateTime, false}};
    users.rows = {
        {{Identifier{"u1"}, 34.0, Category{"gold"}, Timestamp{1577836800}}},
        {{Identifier{"u2"}, Missing{}, Category{"silver"}, Timestamp{1609459200}}},
        {{Identifier{"u3"}, 27.5, Category{"gold"}, Timestamp{1640995200}}},
    };

    TableData orders;
    orders.name = "orders";
    orders.attributes = {{"uid", AttributeKind::Identifier, false},
                         {"amount", AttributeKind::Numeric, false},
                         {"channel", AttributeKind::Categorical, false}};
    orders.rows = {
        {{Identifier{"u1"}, 12.5, Category{"web"}}},
        {{Identifier{"u1"}, 80.0, Category{"store"}}},
        {{Identifier{"u2"}, 5.25, Missing{}}},
        {{Identifier{"u3"}, 42.0, Category{"web"}}},
        {{Identifier{"u3"}, 7.75, Category{"web"}}},
    };

    return RelationalDataset::single_primary("tiny", {users, orders}, "users", "uid");
}

RelationalDataset three_table_shape() {
    RandomStream rng(77);
    auto num = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };

    TableData players;  // 4 attributes
    players.name = "players";
    players.attributes = {{"pid", AttributeKind::Identifier, true},
                          {"height", AttributeKind::Numeric, false},
                          {"weight", AttributeKind::Numeric, false},
                          {"college", AttributeKind::Categorical, false}};
    const std::vector<std::string> colleges = {"duke", "ucla", "unc"};
    for (int i = 0; i < 12; ++i)
        players.rows.push_back({{Identifier{"p" + std::to_string(i)}, num(170, 220),
                                 num(70, 130), Category{colleges[rng.below(3)]}}});

    TableData seasons;  // 7 attributes
    seasons.name = "seasons";
    seasons.attributes = {{"pid", AttributeKind::Identifier, false},
                          {"year", AttributeKind::Numeric, false},
                          {"games", AttributeKind::Numeric, false},
                          {"points", AttributeKind::Numeric, false},
                          {"rebounds", AttributeKind::Numeric, false},
                          {"team", AttributeKind::Categorical, false},
                          {"start", AttributeKind::DateTime, false}};
    const std::vector<std::string> teams = {"hawks", "bulls", "jazz", "heat"};
    for (int i = 0; i < 30; ++i)
        seasons.rows.push_back({{Identifier{"p" + std::to_string(rng.below(12))},
                                 num(1990, 2020), num(10, 82), num(0, 2500), num(0, 1000),
                                 Category{teams[rng.below(4)]},
                                 Timestamp{static_cast<std::int64_t>(num(0, 1.5e9))}}});

    TableData awards;  // 6 attributes
    awards.name = "awards";
    awards.attributes = {{"pid", AttributeKind::Identifier, false},
                         {"award", AttributeKind::Categorical, false},
                         {"season_year", AttributeKind::Numeric, false},
                         {"share", AttributeKind::Numeric, false},
                         {"voted", AttributeKind::DateTime, false},
                         {"league", AttributeKind::Categorical, false}};
    const std::vector<std::string> names = {"mvp", "dpoy", "roy"};
    for (int i = 0; i < 9; ++i)
        awards.rows.push_back({{Identifier{"p" + std::to_string(rng.below(12))},
                                Category{names[rng.below(3)]}, num(1990, 2020), num(0, 1),
                                Timestamp{static_cast<std::int64_t>(num(0, 1.5e9))},
                                Category{names[rng.below(2)]}}});

    return RelationalDataset::single_primary("hoops", {players, seasons, awards}, "players",
                                             "pid");
}

RelationalDataset random_dataset(std::uint64_t seed, std::size_t max_rows) {
    RandomStream rng(seed);
    const std::size_t table_count = 2 + rng.below(2);
    const std::size_t primary_rows = 1 + rng.below(static_cast<std::uint32_t>(max_rows));

    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < primary_rows; ++i) tokens.push_back("k" + std::to_string(i));

    int name_counter = 0;
    auto fresh_name = [&] { return "attr" + std::to_string(name_counter++); };

    auto make_table = [&](const std::string& name, bool primary) {
        TableData t;
        t.name = name;
        t.attributes.push_back({"id", AttributeKind::Identifier, primary});
        const std::size_t extra = 1 + rng.below(5);
        std::vector<AttributeKind> kinds;
        for (std::size_t a = 0; a < extra; ++a) {
            const std::uint32_t pick = rng.below(3);
            const AttributeKind kind = pick == 0   ? AttributeKind::Numeric
                                       : pick == 1 ? AttributeKind::Categorical
                                                   : AttributeKind::DateTime;
            kinds.push_back(kind);
            t.attributes.push_back({fresh_name(), kind, false});
        }
        const std::size_t rows =
            primary ? primary_rows : 1 + rng.below(static_cast<std::uint32_t>(max_rows));
        for (std::size_t r = 0; r < rows; ++r) {
            Row row;
            row.values.push_back(
                Identifier{primary ? tokens[r] : tokens[rng.below(static_cast<std::uint32_t>(
                                         tokens.size()))]});
            for (std::size_t a = 0; a < extra; ++a) {
                if (rng.uniform() < 0.1) {
                    row.values.push_back(Missing{});
                    continue;
                }
                switch (kinds[a]) {
                    case AttributeKind::Numeric:
                        row.values.push_back(-5.0 + 10.0 * rng.uniform());
                        break;
                    case AttributeKind::Categorical:
                        row.values.push_back(Category{"c" + std::to_string(rng.below(4))});
                        break;
                    default:
                        row.values.push_back(
                            Timestamp{static_cast<std::int64_t>(rng.below(2000000000u))});
                }
            }
            t.rows.push_back(std::move(row));
        }
        return t;
    };

    std::vector<TableData> tables;
    tables.push_back(make_table("base", true));
    for (std::size_t t = 1; t < table_count; ++t)
        tables.push_back(make_table("leaf" + std::to_string(t), false));
    return RelationalDataset::single_primary("rand" + std::to_string(seed), std::move(tables),
                                             "base", "id");
}

RelationalDataset signal_dataset(std::uint64_t seed, std::size_t primary_rows,
                                 std::size_t secondary_rows) {
    RandomStream rng(seed);

    TableData patients;
    patients.name = "patients";
    patients.attributes = {{"pid", AttributeKind::Identifier, true},
                           {"label", AttributeKind::Categorical, false},
                           {"baseline", AttributeKind::Numeric, false}};
    for (std::size_t i = 0; i < primary_rows; ++i) {
        const bool pos = i % 2 == 0;
        patients.rows.push_back({{Identifier{"p" + std::to_string(i)},
                                  Category{pos ? "yes" : "no"}, rng.gaussian()}});
    }

    TableData visits;
    visits.name = "visits";
    visits.attributes = {{"pid", AttributeKind::Identifier, false},
                         {"marker_a", AttributeKind::Numeric, false},
                         {"marker_b", AttributeKind::Numeric, false},
                         {"site", AttributeKind::Categorical, false}};
    const std::vector<std::string> sites = {"north", "south", "east"};
    for (std::size_t i = 0; i < secondary_rows; ++i) {
        const std::size_t parent = i % primary_rows;
        const bool pos = parent % 2 == 0;
        // The class means sit 4 sigma apart (sigma = 1): +-2.
        const double center = pos ? 2.0 : -2.0;
        visits.rows.push_back({{Identifier{"p" + std::to_string(parent)},
                                center + rng.gaussian(), -center + rng.gaussian(),
                                Category{sites[rng.below(3)]}}});
    }

    return RelationalDataset::single_primary("clinic", {patients, visits}, "patients", "pid");
}

std::filesystem::path write_schema_dir(const RelationalDataset& dataset,
                                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_synthetic_dataset(dataset, dir);

    nlohmann::json j;
    j["dataset"] = dataset.name;
    j["tables"] = nlohmann::json::array();
    for (const auto& table : dataset.tables) {
        nlohmann::json jt;
        jt["name"] = table.name;
        jt["csv"] = table.name + ".csv";
        jt["attributes"] = nlohmann::json::array();
        nlohmann::json unique = nlohmann::json::array();
        for (const auto& attr : table.attributes) {
            const char* kind = attr.kind == AttributeKind::Numeric       ? "numeric"
                               : attr.kind == AttributeKind::Categorical ? "categorical"
                               : attr.kind == AttributeKind::DateTime    ? "datetime"
                                                                         : "identifier";
            jt["attributes"].push_back({{"name", attr.name}, {"kind", kind}});
            if (attr.unique) unique.push_back(attr.name);
        }
        if (!unique.empty()) jt["unique"] = unique;
        j["tables"].push_back(std::move(jt));
    }
    j["links"] = nlohmann::json::array();
    for (const auto& link : dataset.links)
        j["links"].push_back({{"primary", link.primary},
                              {"identifier", link.identifier},
                              {"secondary", link.secondary}});

    const std::filesystem::path schema = dir / "schema.json";
    std::ofstream out(schema);
    out << j.dump(2) << "\n";
    return schema;
}

}  // namespace testdata
