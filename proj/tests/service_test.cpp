/*
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "aggline/csv.hpp"
#include "aggline/running_example.hpp"
#include "aggline/service.hpp"
#include "aggline/summary.hpp"
#include "httplib.h"

using namespace aggline;
using namespace aggline::service;

namespace {

const char* kCsv =
    "Sal,Department,HireYear\n"
    "1000,Exec,2001\n"
    "1000,Exec,2012\n"
    "200,Eng,2005\n"
    "200,Eng,2011\n"
    "50,Sales,2003\n"
    "50,Sales,2004\n"
    "50,Sales,2015\n"
    "0,Intern,2016\n";

json predicate_le(const char* attr, double v) {
    return json{{"clauses", json::array({json{{"attribute", attr}, {"op", "<="}, {"value", v}}})}};
}

int status_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const HttpError& e) {
        return e.status();
    }
    return 200;
}

class Server : public ::testing::Test {
protected:
    void SetUp() override {
        install_routes(server_, catalog_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    json post(const std::string& path, const json& body, int expect) {
        auto res = client_->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        return json::parse(res->body);
    }
    json get(const std::string& path, int expect = 200) {
        auto res = client_->Get(path);
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        return json::parse(res->body);
    }
    std::string create_dataset() {
        auto res = client_->Post("/datasets?name=staff", kCsv, "text/csv");
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 201);
        return json::parse(res->body)["id"].get<std::string>();
    }

    Catalog catalog_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST(PredicateJson, RoundTrip) {
    const auto p = Predicate{}
                       .where("HireYear", Comparator::le, 2009.0)
                       .where_in("Department", {"Toys", "Sales"})
                       .where_between("Sal", 1.0, 5.0)
                       .where("Department", Comparator::ne, "Exec");
    EXPECT_EQ(predicate_from_json(predicate_to_json(p)), p);
    EXPECT_TRUE(predicate_from_json(json()).clauses.empty());
    EXPECT_TRUE(predicate_from_json(json::object()).clauses.empty());
    const auto words = predicate_from_json(
        json{{"clauses", json::array({json{{"attribute", "A"}, {"op", "ge"}, {"value", 3}}})}});
    EXPECT_EQ(words.clauses[0].op, Comparator::ge);
}

TEST(PredicateJson, Rejections) {
    EXPECT_EQ(status_of([] { predicate_from_json(json::array()); }), 400);
    EXPECT_EQ(status_of([] {
                  predicate_from_json(json{{"clauses", json::array({json{{"attribute", "A"}, {"op", "~"}, {"value", 1}}})}});
              }),
              400);
    EXPECT_EQ(status_of([] {
                  predicate_from_json(json{{"clauses", json::array({json{{"attribute", "A"}, {"op", "in"}}})}});
              }),
              400);
    EXPECT_EQ(status_of([] {
                  predicate_from_json(json{{"clauses", json::array({json{{"attribute", "A"}, {"op", "="}, {"value", true}}})}});
              }),
              400);
}

TEST(AnswerJson, FlagsAndBounds) {
    ApproxAnswer a;
    a.estimate = 1.0;
    a.total_sum = 100.0;
    a.epsilon = 0.05;
    a.additive_bound = 5.0;
    auto j = answer_to_json(a);
    EXPECT_EQ(j["flags"], json::array({"below-resolution"}));
    EXPECT_DOUBLE_EQ(j["relative_bound"].get<double>(), 5.0);
    a.estimate = 0.0;
    j = answer_to_json(a);
    EXPECT_TRUE(j["relative_bound"].is_null());
    a.epsilon.reset();
    j = answer_to_json(a);
    EXPECT_TRUE(j["epsilon"].is_null());
    EXPECT_TRUE(j["flags"].empty());
}

TEST(Catalog, BuildQueryAndLog) {
    Catalog c;
    const auto d = c.add_dataset(kCsv);
    EXPECT_EQ(d["n"], 8);
    EXPECT_EQ(d["totals"]["Sal"], 2550.0);
    const auto id = d["id"].get<std::string>();

    const auto s = c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 40}, {"seed", 3}});
    EXPECT_EQ(s["b"], 40);
    EXPECT_EQ(s["k"], 3);
    EXPECT_EQ(s["scores"].size(), 3u);
    const auto sid = s["id"].get<std::string>();

    const auto all = c.query(sid, json::object());
    EXPECT_EQ(all["estimate"], 2550.0);
    EXPECT_TRUE(all["epsilon"].is_number());
    c.query(sid, json{{"predicate", predicate_le("HireYear", 2009)}});
    c.query(sid, json{{"predicate", predicate_le("HireYear", 2004)}});

    const auto log = c.log(sid, std::nullopt);
    ASSERT_EQ(log["entries"].size(), 3u);
    EXPECT_EQ(log["entries"][1]["predicate"], predicate_le("HireYear", 2009));
    EXPECT_EQ(c.log(sid, 1)["entries"].size(), 1u);
    EXPECT_EQ(c.log(sid, 1)["entries"][0]["predicate"], predicate_le("HireYear", 2004));

    const auto exact = c.exact_query(id, json{{"attribute", "Sal"}, {"predicate", predicate_le("HireYear", 2009)}});
    EXPECT_EQ(exact["exact"], 1300.0);
}

TEST(Catalog, BudgetFromGuarantee) {
    Catalog c;
    const auto id = c.add_dataset(kCsv)["id"].get<std::string>();
    const auto s = c.build_sketch(id, json{{"attribute", "Sal"}, {"m", 100}, {"p", 0.05}, {"epsilon", 0.1}});
    EXPECT_EQ(s["b"], 415);
    EXPECT_LE(s["epsilon_certified"].get<double>(), 0.1);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"epsilon", 0.1}}); }), 400);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 10}, {"m", 1}, {"p", 0.1}, {"epsilon", 0.1}}); }), 400);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 0}}); }), 400);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 10}, {"k", 2}}); }), 400);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 10}, {"k", 1}, {"select", false}}); }), 200);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"b", 10}}); }), 400);
}

TEST(Catalog, AttributeErrors) {
    Catalog c;
    const auto id = c.add_dataset(kCsv)["id"].get<std::string>();
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Nope"}, {"b", 5}}); }), 422);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Department"}, {"b", 5}}); }), 422);
    EXPECT_EQ(status_of([&] { c.build_sketch("d99", json{{"attribute", "Sal"}, {"b", 5}}); }), 404);
    const auto zid = c.add_dataset("A,B\n0,1\n0,2\n")["id"].get<std::string>();
    EXPECT_EQ(status_of([&] { c.build_sketch(zid, json{{"attribute", "A"}, {"b", 5}}); }), 422);
    EXPECT_EQ(status_of([&] { c.add_dataset("Sal\n-1\n"); }), 400);
    EXPECT_EQ(status_of([&] { c.sketch("s42"); }), 404);
    EXPECT_EQ(status_of([&] { c.exact_query(id, json::object()); }), 400);
}

TEST(Catalog, EvictionKeepsSketches) {
    Catalog c;
    const auto id = c.add_dataset(kCsv)["id"].get<std::string>();
    const auto sid = c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 30}})["id"].get<std::string>();
    c.evict_dataset(id);
    EXPECT_EQ(c.relation(id), nullptr);
    EXPECT_TRUE(c.dataset(id)["evicted"].get<bool>());
    EXPECT_EQ(c.query(sid, json::object())["estimate"], 2550.0);
    EXPECT_EQ(status_of([&] { c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 5}}); }), 410);
    EXPECT_EQ(status_of([&] { c.exact_query(id, json{{"attribute", "Sal"}}); }), 410);
}

TEST(Catalog, StatsAccountForEveryTrial) {
    Catalog c;
    const auto id = c.add_dataset(kCsv)["id"].get<std::string>();
    const auto sid = c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 64}, {"seed", 2}})["id"].get<std::string>();
    const auto st = c.stats(sid);
    EXPECT_EQ(st["frequency_total"], 64);
    std::uint64_t mass = 0;
    double prev = 1e300;
    for (const auto& blk : st["blocks"]) {
        EXPECT_LT(blk["value"].get<double>(), prev);
        prev = blk["value"].get<double>();
        EXPECT_GT(blk["value"].get<double>(), 0.0);
        mass += blk["bag_mass"].get<std::uint64_t>();
    }
    EXPECT_EQ(mass, 64u);
}

TEST(Catalog, SnapshotsWrittenInFileFormat) {
    const auto dir = std::filesystem::temp_directory_path() / "aggline-snapshots-test";
    std::filesystem::remove_all(dir);
    Catalog c(dir);
    const auto id = c.add_dataset(kCsv)["id"].get<std::string>();
    const auto sid = c.build_sketch(id, json{{"attribute", "Sal"}, {"b", 25}})["id"].get<std::string>();
    std::ifstream in(dir / (sid + ".agl"), std::ios::binary);
    ASSERT_TRUE(in);
    const auto sk = load_sketch(in);
    EXPECT_EQ(sk.budget, 25u);
    EXPECT_EQ(sk.frequency_sum(), 25u);
    std::filesystem::remove_all(dir);
}

TEST_F(Server, EndToEnd) {
    const auto id = create_dataset();
    const auto d = get("/datasets/" + id);
    EXPECT_EQ(d["name"], "staff");
    EXPECT_EQ(d["n"], 8);

    const auto s = post("/datasets/" + id + "/sketches", json{{"attribute", "Sal"}, {"b", 50}}, 201);
    const auto sid = s["id"].get<std::string>();
    EXPECT_EQ(get("/sketches/" + sid)["b"], 50);

    const auto q = post("/sketches/" + sid + "/query", json{{"predicate", predicate_le("HireYear", 2009)}}, 200);
    EXPECT_TRUE(q.contains("estimate"));
    EXPECT_TRUE(q.contains("epsilon"));
    EXPECT_TRUE(q.contains("flags"));
    const auto ex = post("/datasets/" + id + "/exact-query",
                         json{{"attribute", "Sal"}, {"predicate", predicate_le("HireYear", 2009)}}, 200);
    EXPECT_EQ(ex["exact"], 1300.0);

    EXPECT_EQ(get("/sketches/" + sid + "/log")["entries"].size(), 1u);
    EXPECT_EQ(get("/sketches/" + sid + "/log?limit=0")["entries"].size(), 0u);
    EXPECT_EQ(get("/sketches/" + sid + "/stats")["frequency_total"], 50);

    auto del = client_->Delete("/datasets/" + id);
    ASSERT_TRUE(del);
    EXPECT_EQ(del->status, 200);
    post("/sketches/" + sid + "/query", json::object(), 200);
    const auto gone = post("/datasets/" + id + "/sketches", json{{"attribute", "Sal"}, {"b", 5}}, 410);
    EXPECT_EQ(gone["code"], "evicted");
}

TEST_F(Server, ErrorBodies) {
    const auto id = create_dataset();
    const auto missing = get("/sketches/nope", 404);
    EXPECT_TRUE(missing.contains("code"));
    EXPECT_TRUE(missing.contains("message"));
    EXPECT_TRUE(missing.contains("detail"));
    post("/datasets/" + id + "/sketches", json{{"attribute", "Department"}, {"b", 5}}, 422);
    post("/datasets/" + id + "/sketches", json{{"attribute", "Sal"}, {"b", -3}}, 400);

    auto bad = client_->Post("/datasets/" + id + "/sketches", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    EXPECT_EQ(json::parse(bad->body)["code"], "bad_json");

    auto csv = client_->Post("/datasets", "Sal,Dept\n10,a\n-5,b\n", "text/csv");
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->status, 400);
    EXPECT_EQ(json::parse(csv->body)["detail"], "row 2");

    const auto s = post("/datasets/" + id + "/sketches", json{{"attribute", "Sal"}, {"b", 5}}, 201);
    post("/sketches/" + s["id"].get<std::string>() + "/query",
         json{{"predicate", predicate_le("Fr", 1)}}, 400);
    get("/sketches/" + s["id"].get<std::string>() + "/log?limit=abc", 400);
}

TEST_F(Server, ConcurrentQueriesAllLogged) {
    const auto id = create_dataset();
    const auto sid = post("/datasets/" + id + "/sketches", json{{"attribute", "Sal"}, {"b", 50}}, 201)["id"]
                         .get<std::string>();
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            httplib::Client cl("127.0.0.1", port_);
            for (int i = 0; i < 10; ++i) {
                auto r = cl.Post("/sketches/" + sid + "/query",
                                 json{{"predicate", predicate_le("HireYear", 2000 + t * 5 + i)}}.dump(),
                                 "application/json");
                EXPECT_TRUE(r && r->status == 200);
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(get("/sketches/" + sid + "/log")["entries"].size(), 40u);
}
