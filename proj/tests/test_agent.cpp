#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "asaprl/agent/pretrain.hpp"
#include "asaprl/agent/replay.hpp"
#include "asaprl/agent/train.hpp"
#include "asaprl/neural/checkpoint.hpp"

using namespace asaprl;
using namespace asaprl::agent;

namespace {

sim::ScenarioConfig corridor_cfg(double density = 1.2) {
  sim::ScenarioConfig c;
  c.kind = sim::ScenarioKind::corridor;
  c.lanes = 2;
  c.route_length = 200.0;
  c.density = density;
  return c;
}

TrainConfig small_cfg() {
  TrainConfig c;
  c.hidden = {32, 32};
  c.batch_size = 64;
  c.actor_pretrain_iters = 1500;
  c.critic_pretrain_iters = 1500;
  c.lr_actor = 1e-3;
  c.lr_critic = 1e-3;
  return c;
}

std::string tmp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(p);
  return p.string();
}

// Synthetic skill dataset: states observed near lane centers, theta within
// bounds, all episodes from the corridor scenario shape (obs dim 23).
demo::SkillDataset synthetic_dtheta(int n, uint64_t seed, double theta_spread = 1.0) {
  demo::SkillDataset d;
  d.scenario = corridor_cfg();
  d.skill_steps = 10;
  Rng rng(seed);
  SkillBounds b = d.scenario.skill_bounds();
  for (int i = 0; i < n; ++i) {
    demo::SkillRecord r;
    r.traj_index = 0;
    r.seg_index = i;
    r.obs = Eigen::VectorXd::NullaryExpr(23, [&](int) { return rng.uniform(-1.0, 1.0); });
    r.obs(0) = rng.uniform(3.0, 10.0);
    r.theta = SkillParams{theta_spread * rng.uniform(-2.0, 2.0),
                          theta_spread * rng.uniform(-0.2, 0.2), rng.uniform(2.0, 10.0),
                          theta_spread * rng.uniform(-1.0, 1.0)};
    r.theta = b.clamp_params(r.theta);
    r.converged = true;
    d.records.push_back(std::move(r));
  }
  return d;
}

using MatF = neural::Mlp<float>::Mat;

Batch<float> single_state_batch(ReplayBuffer& buf, Rng& rng, int batch, int obs_dim,
                                const SkillBounds& b) {
  auto ids = buf.sample_indices(rng, batch);
  Batch<float> bt;
  bt.obs.resize(obs_dim, batch);
  bt.next_obs.resize(obs_dim, batch);
  bt.act_u.resize(4, batch);
  bt.reward.resize(batch);
  bt.done.resize(batch);
  for (int j = 0; j < batch; ++j) {
    bt.obs.col(j) = buf.obs(ids[j]);
    bt.next_obs.col(j) = buf.next_obs(ids[j]);
    bt.act_u.col(j) = neural::unscale_action(buf.theta(ids[j]), b).cast<float>();
    bt.reward(j) = static_cast<float>(buf.reward(ids[j]));
    bt.done(j) = buf.done(ids[j]) ? 1.0f : 0.0f;
  }
  return bt;
}

}  // namespace

TEST_CASE("replay buffer sampling and integrity") {
  ReplayBuffer buf(4, 100);
  Rng rng(5);
  std::vector<double> rewards;
  for (int i = 0; i < 150; ++i) {
    Eigen::VectorXd o = Eigen::VectorXd::Constant(4, i);
    buf.push(o, SkillParams{0, 0, double(i), 0}, i * 0.5, o, i % 2 == 0);
    rewards.push_back(i * 0.5);
  }
  CHECK(buf.size() == 100);

  SUBCASE("batch indices are distinct and stored values round trip") {
    auto ids = buf.sample_indices(rng, 32);
    std::set<int> uniq(ids.begin(), ids.end());
    CHECK(uniq.size() == 32);
    for (int id : ids) {
      // ring position id corresponds to insertion 50 + id
      double v = buf.obs(id)(0);
      CHECK(buf.reward(id) == v * 0.5);
      CHECK(buf.theta(id).v_e == v);
    }
  }
  SUBCASE("sampling is deterministic given the rng") {
    Rng a(9), b(9);
    CHECK(buf.sample_indices(a, 16) == buf.sample_indices(b, 16));
  }
  SUBCASE("batch larger than content is refused") {
    ReplayBuffer small(4, 10);
    small.push(Eigen::VectorXd::Zero(4), SkillParams{}, 0, Eigen::VectorXd::Zero(4), false);
    CHECK_THROWS_AS(small.sample_indices(rng, 2), std::logic_error);
  }
}

TEST_CASE("actor pretraining on skill demonstrations") {
  SUBCASE("single repeated pair converges to the target action") {
    demo::SkillDataset d = synthetic_dtheta(1, 3);
    d.records[0].theta = SkillParams{1.5, 0.1, 6.0, 0.5};
    for (int i = 0; i < 63; ++i) d.records.push_back(d.records[0]);
    TrainConfig cfg = small_cfg();
    cfg.bc_entropy_weight = 0.0;
    cfg.actor_pretrain_iters = 3000;
    auto res = pretrain_actor(d, cfg);
    SkillBounds b = d.scenario.skill_bounds();
    Eigen::VectorXd scale = observation_scale(4);
    Eigen::VectorXd scaled = d.records[0].obs.cwiseQuotient(scale);
    Rng rng(0);
    auto pol = neural::sample_policy(res.actor, scaled, rng, true);
    Eigen::Vector4d target = neural::unscale_action(d.records[0].theta, b);
    CHECK((pol.action - target).cwiseAbs().maxCoeff() <= 0.05);
  }

  SUBCASE("entropy bonus raises converged policy entropy (3 seeds, median)") {
    std::vector<double> h0, h1;
    for (uint64_t s : {1ull, 2ull, 3ull}) {
      demo::SkillDataset d = synthetic_dtheta(256, 100 + s);
      TrainConfig cfg = small_cfg();
      cfg.seed = s;
      cfg.bc_entropy_weight = 0.0;
      h0.push_back(pretrain_actor(d, cfg).curve.back()[2]);
      cfg.bc_entropy_weight = 0.01;
      h1.push_back(pretrain_actor(d, cfg).curve.back()[2]);
    }
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    CHECK(h1[1] > h0[1]);
  }

  SUBCASE("held-out log-likelihood improves") {
    demo::SkillDataset d = synthetic_dtheta(400, 17);
    TrainConfig cfg = small_cfg();
    auto res = pretrain_actor(d, cfg);
    CHECK(res.heldout_ll_after > res.heldout_ll_before);
  }

  SUBCASE("out-of-bounds parameters are rejected") {
    demo::SkillDataset d = synthetic_dtheta(10, 23);
    d.records[4].theta.v_e = d.scenario.skill_bounds().v_max + 1.0;
    CHECK_THROWS_AS(pretrain_actor(d, small_cfg()), std::invalid_argument);
  }
}

TEST_CASE("skill rollout collection") {
  sim::ScenarioConfig cfg = corridor_cfg(0.0);
  cfg.route_length = 3000.0;  // no terminations inside the horizon
  cfg.time_limit_steps = 100000;
  // linear lane-keeping actor with near-floor noise: corrects lateral and
  // heading errors each skill, so no episode ever terminates
  Rng rng(5);
  auto actor = neural::Mlp<float>::random({23, 8}, rng);
  actor.w[0].setZero();
  actor.b[0].setZero();
  actor.w[0](0, 2) = -1.0f;   // y_e opposes the lateral offset
  actor.w[0](0, 3) = -1.7f;   // and the travel drift from heading error
  actor.w[0](1, 3) = -2.0f;   // phi_e realigns with the route
  actor.b[0].tail(4).setConstant(-30.0f);

  SUBCASE("1000 env steps at T=10 produce 100 records") {
    auto ds = collect_skill_rollouts(actor, cfg, 1000, 10, 42);
    CHECK(ds.records.size() == 100);
    for (const auto& r : ds.records) CHECK(!r.done);
  }
  SUBCASE("stored skill reward equals the episode-log step sum") {
    std::vector<sim::StepRecord> log;
    auto ds = collect_skill_rollouts(actor, cfg, 300, 10, 42, 0, &log);
    REQUIRE(log.size() == 300);
    for (size_t k = 0; k < ds.records.size(); ++k) {
      double sum = 0.0;
      for (size_t t = 10 * k; t < 10 * (k + 1); ++t) sum += log[t].reward;
      CHECK(ds.records[k].reward == doctest::Approx(sum).epsilon(1e-12));
    }
  }
  SUBCASE("fixed seed reproduces the dataset") {
    auto a = collect_skill_rollouts(actor, cfg, 500, 10, 7);
    auto b = collect_skill_rollouts(actor, cfg, 500, 10, 7);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].obs == b.records[i].obs);
      CHECK(a.records[i].reward == b.records[i].reward);
      CHECK(a.records[i].theta.y_e == b.records[i].theta.y_e);
    }
  }
}

TEST_CASE("critic pretraining fixed points") {
  Rng rng(8);
  auto actor = neural::Mlp<float>::random({23, 32, 8}, rng);

  auto make_ds = [&](int n, double reward, uint64_t seed) {
    demo::SkillRewardDataset ds;
    ds.scenario = corridor_cfg();
    ds.skill_steps = 10;
    Rng r(seed);
    SkillBounds b = ds.scenario.skill_bounds();
    for (int i = 0; i < n; ++i) {
      demo::SkillRewardRecord rec;
      rec.obs = Eigen::VectorXd::NullaryExpr(23, [&](int) { return r.uniform(-1.0, 1.0); });
      rec.next_obs = rec.obs;
      rec.theta = b.clamp_params(SkillParams{r.uniform(-2, 2), r.uniform(-0.3, 0.3),
                                             r.uniform(1, 10), r.uniform(-2, 2)});
      rec.reward = reward;
      rec.done = true;
      ds.records.push_back(std::move(rec));
    }
    return ds;
  };

  auto q_on_dataset = [&](neural::Mlp<float>& q, const demo::SkillRewardDataset& ds) {
    SkillBounds b = ds.scenario.skill_bounds();
    Eigen::VectorXd scale = observation_scale(4);
    double worst = 0.0;
    for (const auto& rec : ds.records) {
      MatF x(23 + 4, 1);
      x.topRows(23) = rec.obs.cwiseQuotient(scale).cast<float>();
      x.bottomRows(4) = neural::unscale_action(rec.theta, b).cast<float>();
      worst = std::max(worst, std::abs(static_cast<double>(q.forward(x)(0, 0)) - rec.reward));
    }
    return worst;
  };

  SUBCASE("terminal zero-reward dataset drives Q toward zero") {
    auto ds = make_ds(128, 0.0, 3);
    TrainConfig cfg = small_cfg();
    cfg.critic_pretrain_iters = 2500;
    auto res = pretrain_critic(ds, actor, cfg);
    CHECK(q_on_dataset(res.q1, ds) <= 0.1);
  }
  SUBCASE("single repeated transition with reward 1 drives Q to 1") {
    auto ds = make_ds(1, 1.0, 4);
    for (int i = 0; i < 63; ++i) ds.records.push_back(ds.records[0]);
    TrainConfig cfg = small_cfg();
    cfg.critic_pretrain_iters = 2500;
    auto res = pretrain_critic(ds, actor, cfg);
    CHECK(q_on_dataset(res.q1, ds) <= 0.05);
  }
  SUBCASE("held-out TD loss decreases over pretraining") {
    auto ds = make_ds(400, 0.5, 5);
    Rng nr(1);
    for (auto& rec : ds.records) rec.reward = nr.uniform(-1.0, 2.0);
    TrainConfig cfg = small_cfg();
    auto res = pretrain_critic(ds, actor, cfg);
    CHECK(res.heldout_td_after < res.heldout_td_before);
  }
}

TEST_CASE("soft target algebra") {
  Rng rng(19);
  const int obs_dim = 6;
  TrainConfig cfg = small_cfg();
  cfg.hidden = {16, 16};
  auto nets = SacNets<float>::make(obs_dim, cfg.hidden, 0.2f, rng);

  Batch<float> bt;
  const int B = 8;
  bt.obs = MatF::Random(obs_dim, B);
  bt.next_obs = MatF::Random(obs_dim, B);
  bt.act_u = MatF::Random(4, B) * 0.9f;
  bt.reward = neural::Mlp<float>::Vec::Random(B);
  bt.done.setZero(B);

  SUBCASE("gamma = 0 reduces targets to the reward") {
    TrainConfig c0 = cfg;
    c0.gamma = 0.0;
    auto y = soft_targets(nets, bt, c0, MatF::Random(4, B));
    for (int j = 0; j < B; ++j) CHECK(y(j) == bt.reward(j));
  }
  SUBCASE("terminal transitions ignore the next state") {
    bt.done.setOnes(B);
    auto y1 = soft_targets(nets, bt, cfg, MatF::Random(4, B));
    bt.next_obs = MatF::Random(obs_dim, B);  // perturb s'
    auto y2 = soft_targets(nets, bt, cfg, MatF::Random(4, B));
    for (int j = 0; j < B; ++j) CHECK(y1(j) == y2(j));
  }
}

TEST_CASE("single-transition fixed point: Q -> 1 and entropy -> target") {
  // Constant-reward terminal MDP: the critic must learn Q = 1; the
  // temperature controller must lift policy entropy to the target. The
  // target sits just below the squashed-Gaussian entropy ceiling, the only
  // band a flat Q-landscape can regulate to.
  TrainConfig cfg;
  cfg.hidden = {64, 64};
  cfg.batch_size = 64;
  cfg.lr_actor = cfg.lr_critic = 3e-3;
  cfg.lr_alpha = 5e-2;
  cfg.alpha_init = 0.01;
  cfg.target_entropy = 2.6;
  const int obs_dim = 6;
  Rng rng(3);
  auto nets = SacNets<float>::make(obs_dim, cfg.hidden, static_cast<float>(cfg.alpha_init), rng);
  SacOptimizers<float> opt;
  opt.init(nets, static_cast<float>(cfg.lr_actor), static_cast<float>(cfg.lr_critic));

  Eigen::VectorXd s0 = Eigen::VectorXd::Constant(obs_dim, 0.1);
  ReplayBuffer buf(obs_dim, 10000);
  Rng sample_rng(11), update_rng(12);
  SkillBounds b;

  double entropy_acc = 0.0;
  int entropy_n = 0;
  for (int it = 0; it < 2000; ++it) {
    auto pol = neural::sample_policy(nets.actor, s0, sample_rng, false);
    buf.push(s0, neural::scale_action(pol.action, b), 1.0, s0, true);
    if (buf.size() < cfg.batch_size) continue;
    auto bt = single_state_batch(buf, update_rng, cfg.batch_size, obs_dim, b);
    auto st = sac_update(nets, opt, bt, cfg, update_rng);
    if (it >= 1800) {
      entropy_acc += st.entropy;
      ++entropy_n;
    }
  }

  Rng eval_rng(77);
  double q_acc = 0.0;
  for (int i = 0; i < 256; ++i) {
    auto pol = neural::sample_policy(nets.actor, s0, eval_rng, false);
    MatF x(obs_dim + 4, 1);
    x.topRows(obs_dim) = s0.cast<float>();
    x.bottomRows(4) = pol.action.cast<float>();
    q_acc += static_cast<double>(nets.q1.forward(x)(0, 0));
  }
  CHECK(std::abs(q_acc / 256 - 1.0) <= 0.05);
  CHECK(std::abs(entropy_acc / entropy_n - cfg.target_entropy) <= 0.2);
}

TEST_CASE("train loop integration on a small corridor run") {
  sim::ScenarioConfig scen = corridor_cfg(1.0);
  scen.route_length = 150.0;
  TrainConfig cfg = small_cfg();
  cfg.total_env_steps = 2500;
  cfg.eval_interval_steps = 1250;
  cfg.eval_episodes = 2;
  cfg.update_start = 400;
  cfg.replay_capacity = 5000;
  cfg.seed = 5;
  cfg.prior_mode = PriorMode::no_prior;

  SUBCASE("no-prior runs read no checkpoint files and reproduce bit-exactly") {
    std::string d1 = tmp_dir("asaprl_train_a");
    std::string d2 = tmp_dir("asaprl_train_b");
    auto r1 = train(cfg, scen, TrainInputs{}, d1);
    auto r2 = train(cfg, scen, TrainInputs{}, d2);
    CHECK(r1.files_read.empty());
    CHECK(r1.gradient_steps > 0);
    // the step counter advances T per skill, so the last skill may overshoot
    CHECK(r1.env_steps >= cfg.total_env_steps);
    CHECK(r1.env_steps < cfg.total_env_steps + cfg.skill_steps);
    std::ifstream a(r1.curve_csv), b(r2.curve_csv);
    std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
    CHECK(ca.find("iteration,env_steps,reward") == 0);
  }

  SUBCASE("bc_only performs no gradient steps") {
    Rng rng(2);
    auto actor = neural::Mlp<float>::random({23, 32, 32, 8}, rng);
    std::string dir = tmp_dir("asaprl_train_bc");
    std::string ckpt = dir + "/actor_in.ckpt";
    neural::save_checkpoint(neural::Checkpoint::from(actor), ckpt);
    TrainConfig c = cfg;
    c.prior_mode = PriorMode::bc_only;
    TrainInputs in;
    in.actor_checkpoint = ckpt;
    auto r = train(c, scen, in, dir);
    CHECK(r.gradient_steps == 0);
    CHECK(r.env_steps == 0);
    CHECK(r.files_read == std::vector<std::string>{ckpt});
  }

  SUBCASE("prior modes demand their checkpoints") {
    TrainConfig c = cfg;
    c.prior_mode = PriorMode::double_init;
    CHECK_THROWS_AS(train(c, scen, TrainInputs{}, tmp_dir("asaprl_train_x")),
                    std::invalid_argument);
  }

  SUBCASE("non-finite losses abort with a diagnostic dump") {
    TrainConfig c = cfg;
    c.lr_critic = 1e30;
    c.total_env_steps = 1500;
    std::string dir = tmp_dir("asaprl_train_nan");
    CHECK_THROWS_AS(train(c, scen, TrainInputs{}, dir), std::runtime_error);
    CHECK(std::filesystem::exists(dir + "/nan_diagnostic.json"));
  }
}

TEST_CASE("evaluation summaries") {
  sim::ScenarioConfig scen = corridor_cfg(1.0);
  Rng rng(4);
  auto actor = neural::Mlp<float>::random({23, 32, 8}, rng);

  SUBCASE("zero episodes give an empty summary") {
    auto s = evaluate(actor, scen, 10, 0, 1);
    CHECK(s.episodes == 0);
    CHECK(s.per_episode.empty());
  }
  SUBCASE("random actor metrics are finite and within range") {
    auto s = evaluate(actor, scen, 10, 5, 9);
    CHECK(s.success_rate >= 0.0);
    CHECK(s.success_rate <= 1.0);
    CHECK(std::isfinite(s.mean_reward));
    CHECK(std::isfinite(s.mean_completion));
  }
  SUBCASE("same checkpoint and seed give identical summaries, any job count") {
    auto a = evaluate(actor, scen, 10, 6, 31, 1);
    auto b = evaluate(actor, scen, 10, 6, 31, 1);
    auto c = evaluate(actor, scen, 10, 6, 31, 3);
    CHECK(a.mean_reward == b.mean_reward);
    CHECK(a.mean_reward == c.mean_reward);
    CHECK(a.success_rate == c.success_rate);
    CHECK(a.mean_completion == c.mean_completion);
  }
}
