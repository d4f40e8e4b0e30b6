#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <sstream>

#include "test_support.h"
#include "trialmatch/common/error.h"
#include "trialmatch/service/cli.h"
#include "trialmatch/service/config.h"
#include "trialmatch/service/http_server.h"
#include "trialmatch/service/match_service.h"

namespace trialmatch::service {
namespace {

using nlohmann::json;
using testing::TempDir;

ServiceConfig desk_config() {
  ServiceConfig c;
  c.corpus_dir = testing::fixture_dir() / "desk";
  c.mock_providers = true;
  return c;
}

std::unique_ptr<MatchService> loaded_service(ServiceConfig c = desk_config()) {
  auto s = std::make_unique<MatchService>(c, make_providers(c));
  s->reload();
  return s;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "trialmatch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const std::string kDesk = (testing::fixture_dir() / "desk").string();

TEST(Config, ParseResolvesPathsAndRejectsUnknown) {
  const auto c = parse_config(R"({"corpus_dir":"corpus","port":9000,"k_patient":5})", "/srv/app");
  EXPECT_EQ(c.corpus_dir.value(), std::filesystem::path("/srv/app/corpus"));
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.k_patient, 5u);
  EXPECT_THROW(parse_config(R"({"colour":"blue"})"), ParseError);
  EXPECT_THROW(parse_config(R"({"threshold":1.5})"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"k_space":0})"), InvalidArgument);
}

TEST(Config, EnvironmentOverridesEndpoints) {
  ::setenv("TRIALMATCH_CHECKER_URL", "http://checker.test", 1);
  ServiceConfig c;
  apply_environment(c);
  ::unsetenv("TRIALMATCH_CHECKER_URL");
  EXPECT_EQ(c.endpoints.checker.value(), "http://checker.test");
  EXPECT_FALSE(c.endpoints.llm.has_value());
}

TEST(Config, MockProvidersIgnoreEndpoints) {
  ServiceConfig c;
  c.endpoints.embedding = "http://emb.test";
  c.mock_providers = true;
  const auto p = make_providers(c);
  EXPECT_EQ(p.embedder->id(), "mock-hashbag-v1/256");
}

TEST(Queries, ParsingRules) {
  EXPECT_THROW(parse_patient_query("{"), ParseError);
  EXPECT_THROW(parse_patient_query("{}"), InvalidArgument);
  EXPECT_THROW(parse_patient_query(R"({"summary_text":"a","patient_id":"b"})"), InvalidArgument);
  EXPECT_THROW(parse_patient_query(R"({"summary_text":"   "})"), InvalidArgument);
  const auto q = parse_patient_query(R"({"patient_id":"p","k":3,"as_of_date":"2024-01-02","checker":false})");
  EXPECT_EQ(q.k.value(), 3u);
  EXPECT_EQ(q.as_of.value(), Date::from_ymd(2024, 1, 2));
  EXPECT_FALSE(q.use_checker);
  EXPECT_THROW(parse_space_query(R"({"space_text":"x","close_date":"2024-01-01"})"), InvalidArgument);
  const auto s = parse_space_query(R"({"space_id":"NCT90000001#1","splits":["test","train"]})");
  EXPECT_EQ(s.splits->size(), 2u);
}

TEST(Service, StatusCodes) {
  const auto cfg = desk_config();
  MatchService empty(cfg, make_providers(cfg));
  EXPECT_FALSE(empty.loaded());
  EXPECT_EQ(empty.handle_match_patient(R"({"summary_text":"lung cancer"})").status, 409);
  EXPECT_EQ(json::parse(empty.handle_health().body)["index_loaded"], false);

  const auto s = loaded_service();
  EXPECT_EQ(s->handle_match_patient("not json").status, 400);
  EXPECT_EQ(s->handle_match_patient(R"({"k":3})").status, 400);
  EXPECT_EQ(s->handle_match_patient(R"({"patient_id":"nobody"})").status, 404);
  EXPECT_EQ(s->handle_match_space(R"({"space_id":"NCT00000000#9"})").status, 404);
  EXPECT_EQ(s->handle_trial("NCT00000000").status, 404);
  EXPECT_EQ(s->handle_trial("bogus").status, 400);
  EXPECT_EQ(s->handle_space("NCT90000001#1").status, 200);
  EXPECT_EQ(json::parse(s->handle_trial("NCT90000001").body)["nct_id"], "NCT90000001");
}

TEST(Service, PatientQueryShape) {
  const auto s = loaded_service();
  const auto& summary = s->matcher()->corpus().summaries.front();
  const auto reply = s->handle_match_patient(
      json{{"summary_ref", summary.ref().key()}, {"k", 5}, {"show_filtered", true}, {"temporal", false}}.dump());
  ASSERT_EQ(reply.status, 200) << reply.body;
  const auto j = json::parse(reply.body);
  EXPECT_EQ(j["query_ref"], summary.ref().key());
  EXPECT_EQ(j["k"], 5);
  EXPECT_EQ(j["n_candidates"], 5);
  ASSERT_EQ(j["candidates"].size(), 5u);
  for (const auto& c : j["candidates"]) {
    for (const char* key : {"rank", "space_id", "nct_id", "cosine", "checker_prob", "passed", "raw_text"}) {
      EXPECT_TRUE(c.contains(key)) << key;
    }
  }
  const auto hidden = json::parse(s->handle_match_patient(
      json{{"summary_ref", summary.ref().key()}, {"k", 5}, {"temporal", false}}.dump()).body);
  EXPECT_EQ(hidden["candidates"].size(), hidden["n_passed"].get<std::size_t>());
}

TEST(Service, FreeTextSpaceMatchesStoredSpaceWithSameWindow) {
  const auto s = loaded_service();
  const auto m = s->matcher();
  const auto& space = m->corpus().spaces[1];
  const auto window = m->trial_window(space.nct_id).value();
  SpaceQuery by_id;
  by_id.space_id = space.space_id;
  SpaceQuery by_text;
  by_text.space_text = space.raw_text;
  by_text.open_date = window.open;
  by_text.close_date = window.close;
  const auto a = s->run_space(by_id);
  const auto b = s->run_space(by_text);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    EXPECT_EQ(a.candidates[i].item_ref, b.candidates[i].item_ref);
    EXPECT_EQ(a.candidates[i].cosine, b.candidates[i].cosine);
    EXPECT_EQ(a.candidates[i].passed, b.candidates[i].passed);
  }
  SpaceQuery by_nct = by_text;
  by_nct.open_date.reset();
  by_nct.close_date.reset();
  by_nct.nct_id = space.nct_id;
  EXPECT_EQ(s->run_space(by_nct).candidates.size(), a.candidates.size());
}

TEST(Service, UserTextQueryRef) {
  const auto s = loaded_service();
  PatientQuery q;
  q.summary_text = "Metastatic lung adenocarcinoma with EGFR exon 19 deletion.";
  const auto r = s->run_patient(q);
  EXPECT_EQ(r.query_ref.rfind("user:", 0), 0u);
  EXPECT_EQ(r.query_ref.size(), 5u + 16u);
}

TEST(Service, AuthFailsClosed) {
  auto cfg = desk_config();
  cfg.require_auth = true;
  cfg.auth_token_env = "TRIALMATCH_TEST_TOKEN_UNSET";
  MatchService s(cfg, make_providers(cfg));
  EXPECT_FALSE(s.authorized("Bearer anything"));
  cfg.auth_token_env = "TRIALMATCH_TEST_TOKEN";
  ::setenv("TRIALMATCH_TEST_TOKEN", "sesame", 1);
  MatchService t(cfg, make_providers(cfg));
  EXPECT_TRUE(t.authorized("Bearer sesame"));
  EXPECT_FALSE(t.authorized("Bearer nope"));
  EXPECT_FALSE(t.authorized(""));
  ::unsetenv("TRIALMATCH_TEST_TOKEN");
}

TEST(Service, StatusMapping) {
  EXPECT_EQ(status_for(InvalidArgument("x")), 400);
  EXPECT_EQ(status_for(ParseError("x")), 400);
  EXPECT_EQ(status_for(NotFound("x")), 404);
  EXPECT_EQ(status_for(ConflictError("x")), 409);
  EXPECT_EQ(status_for(TransportError("x")), 502);
  EXPECT_EQ(status_for(std::runtime_error("x")), 500);
}

TEST(Http, EndpointsOverLoopback) {
  const auto s = loaded_service();
  HttpServer server(*s);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  const auto h = json::parse(health->body);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["n_spaces"], 40);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  const auto& summary = s->matcher()->corpus().summaries.front();
  const std::string body = json{{"summary_ref", summary.ref().key()}, {"show_filtered", true}}.dump();
  auto match = client.Post("/v1/match/patient", body, "application/json");
  ASSERT_TRUE(match);
  EXPECT_EQ(match->status, 200);
  EXPECT_EQ(match->body, s->handle_match_patient(body).body);

  auto bad = client.Post("/v1/match/patient", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = client.Get("/v1/trials/NCT00000000");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto space = client.Get("/v1/spaces/NCT90000001%231");
  ASSERT_TRUE(space);
  EXPECT_EQ(space->status, 200);
  auto options = client.Options("/v1/match/patient");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);
  auto reload = client.Post("/v1/admin/reload", "", "application/json");
  ASSERT_TRUE(reload);
  EXPECT_EQ(reload->status, 200);
  server.stop();
}

TEST(Http, AuthRequiredExceptHealth) {
  auto cfg = desk_config();
  cfg.require_auth = true;
  cfg.auth_token_env = "TRIALMATCH_TEST_HTTP_TOKEN";
  ::setenv("TRIALMATCH_TEST_HTTP_TOKEN", "sesame", 1);
  const auto s = loaded_service(cfg);
  HttpServer server(*s);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  EXPECT_EQ(client.Get("/v1/health")->status, 200);
  EXPECT_EQ(client.Get("/v1/trials/NCT90000001")->status, 401);
  EXPECT_EQ(client.Get("/v1/trials/NCT90000001", {{"Authorization", "Bearer sesame"}})->status, 200);
  server.stop();
  ::unsetenv("TRIALMATCH_TEST_HTTP_TOKEN");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"--version"}).code, 0);
  const auto unknown = cli({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("--help"), std::string::npos);
  EXPECT_EQ(cli({"match", "patient", "--k", "notanumber"}).code, 2);
  const auto runtime = cli({"--mock-providers", "match", "patient", "--corpus", kDesk, "--patient-id", "nobody"});
  EXPECT_EQ(runtime.code, 1);
  EXPECT_FALSE(runtime.err.empty());
}

TEST(Cli, MatchPatientPrintsKLines) {
  const auto& summary = testing::desk_corpus().summaries.front();
  const auto r = cli({"--mock-providers", "match", "patient", "--corpus", kDesk, "--patient-id", summary.patient_id,
                      "--k", "10", "--no-temporal"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), 10u);
  EXPECT_EQ(r.out.rfind("1\tNCT9", 0), 0u);
}

TEST(Cli, JsonOutputEqualsHttpBody) {
  const auto& summary = testing::desk_corpus().summaries[2];
  const auto r = cli({"--mock-providers", "match", "patient", "--corpus", kDesk, "--summary-ref", summary.ref().key(),
                      "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = loaded_service();
  const auto http = s->handle_match_patient(json{{"summary_ref", summary.ref().key()}, {"show_filtered", true}}.dump());
  EXPECT_EQ(r.out, http.body + "\n");
}

TEST(Cli, MatchSpaceAndEval) {
  const auto r = cli({"--mock-providers", "match", "space", "--corpus", kDesk, "--space-id", "NCT90000001#1", "--k", "5",
                      "--no-temporal"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), 5u);
  const auto e = cli({"--mock-providers", "eval", "--corpus", kDesk, "--format", "jsonl"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(lines(e.out), 4u);
}

TEST(Cli, PipelineStagesRoundTrip) {
  TempDir dir;
  const auto trials = (dir / "trials.jsonl").string();
  write_trials(testing::desk_corpus().trials, trials);
  ASSERT_EQ(cli({"--mock-providers", "extract-spaces", "--trials", trials, "--out", (dir / "spaces.jsonl").string()}).code,
            0);
  EXPECT_EQ(read_spaces(dir / "spaces.jsonl").size(), testing::desk_corpus().spaces.size());
  const auto idx = (dir / "index.tmix").string();
  ASSERT_EQ(cli({"--mock-providers", "embed-index", "--corpus", kDesk, "--out", idx}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(idx));
  const auto r = cli({"--mock-providers", "trainprep", "--corpus", kDesk, "--out", (dir / "train").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"tagger.jsonl", "ranking_pairs.jsonl", "contrastive_pairs.jsonl", "checker.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "train" / f)) << f;
  }
}

}  // namespace
}  // namespace trialmatch::service
