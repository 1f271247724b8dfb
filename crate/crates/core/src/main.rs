use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use sls_core::baselines::{
    backward_induction_br, BestResponsePolicy, EvenSplitPolicy, Prior, RandomPolicy, UotPolicy,
};
use sls_core::efg::{build_full_game, DEFAULT_NODE_BUDGET};
use sls_core::harness::{
    adversarial_counts, eval_worst_case, play_rng, sample_dirichlet_prior, Game, GameSpec,
    DEFAULT_ADVERSARIAL_SAMPLES, DEFAULT_DIRICHLET_SAMPLES,
};
use sls_core::search::{
    exact_expected_costs, play_game, sample_index, GotPolicy, PlayState, Policy,
};
use sls_core::solver::{cfr_solve_with, exploitability, CfrOptions};
use sls_core::{Error, Result, VariantConfig};

#[derive(Parser)]
#[command(name = "sls", version, about = "Adversarial twenty-questions solver and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the full game of a fixture or small synthetic instance and print its value.
    Solve(GameArgs),
    /// Play one game against a fixed item and print the transcript.
    Play {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Item name or index.
        #[arg(long)]
        item: String,
        /// Write the transcript as JSON lines here instead of stdout.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Evaluate a policy on every item and emit a report.
    Eval {
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Plays per item; defaults to 10 for randomized policies and 1 otherwise.
        #[arg(long)]
        repeats: Option<usize>,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-item CSV table path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Comma-separated counts for Dirichlet priors `Dir(k · counts)`.
        #[arg(long, value_delimiter = ',')]
        dirichlet_counts: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        dirichlet_k: f64,
        #[arg(long, default_value_t = DEFAULT_DIRICHLET_SAMPLES)]
        dirichlet_samples: usize,
        /// Concentration on item 0 for the adversarial prior family (repeatable).
        #[arg(long)]
        adversarial_alpha: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_ADVERSARIAL_SAMPLES)]
        adversarial_samples: usize,
    },
    /// Best response by backward induction against a known prior.
    Br {
        #[command(flatten)]
        game: GameArgs,
        /// Comma-separated prior; uniform when absent.
        #[arg(long, value_delimiter = ',')]
        prior: Vec<f64>,
    },
    /// Compare search with full depth against the full-game solution.
    Fullgame(GameArgs),
    /// Play against the search policy, answering its questions at the terminal.
    Interactive(GameArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    RandomSplit,
    FeatureSplit,
    Llm,
}

#[derive(Args)]
struct GameArgs {
    /// Built-in fixture (example1, example2, example3).
    #[arg(long, conflicts_with = "oracle")]
    fixture: Option<String>,
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Number of items for synthetic oracles.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Split ratio for synthetic oracles.
    #[arg(long, default_value_t = 0.25)]
    r: f64,
    /// Feature count for the feature-split oracle.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Dataset file for the language-model oracle.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Prompt family: 20q-even, 20q-natural, md or ts.
    #[arg(long, default_value = "20q-even")]
    setting: String,
    /// JSON file with variant settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    cfr_plus: bool,
    #[arg(long)]
    weighted: bool,
    /// Prepend the identity question of this item at the root (repeatable).
    #[arg(long)]
    inject: Vec<String>,
}

impl GameArgs {
    fn variant(&self) -> Result<VariantConfig> {
        let mut v = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => VariantConfig::default(),
        };
        if self.weighted {
            v = v.weighted();
        }
        if let Some(s) = self.seed {
            v.seed = s;
        }
        if let Some(m) = self.m {
            v.m = m;
        }
        if let Some(d) = self.d {
            v.d = d;
        }
        if let Some(i) = self.iterations {
            v.cfr_iterations = i;
        }
        v.cfr_plus |= self.cfr_plus;
        Ok(v)
    }

    fn spec(&self, seed: u64) -> Result<GameSpec> {
        if let Some(name) = &self.fixture {
            return Ok(GameSpec::Fixture { name: name.clone() });
        }
        match self.oracle {
            Some(OracleKind::RandomSplit) => Ok(GameSpec::RandomSplit {
                n: self.n,
                r: self.r,
                seed,
            }),
            Some(OracleKind::FeatureSplit) => Ok(GameSpec::FeatureSplit {
                n: self.n,
                k: self.k,
                r: self.r,
                seed,
            }),
            Some(OracleKind::Llm) => Ok(GameSpec::Llm {
                dataset: self
                    .dataset
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig("--dataset is required".into()))?,
                setting: self.setting.clone(),
            }),
            None => Err(Error::InvalidConfig(
                "pass --fixture or --oracle".into(),
            )),
        }
    }

    fn build(&self) -> Result<Game> {
        let variant = self.variant()?;
        self.spec(variant.seed)?.build(&variant, &self.inject)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Got,
    Uot,
    EvenSplit,
    Random,
    Br,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value = "got")]
    policy: PolicyKind,
}

fn make_policy(kind: PolicyKind, game: &Game) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Got => Box::new(GotPolicy::new(game.variant.clone())),
        PolicyKind::Uot => Box::new(UotPolicy::new(game.variant.d)),
        PolicyKind::EvenSplit => Box::new(EvenSplitPolicy),
        PolicyKind::Random => Box::new(RandomPolicy),
        PolicyKind::Br => Box::new(BestResponsePolicy::new(
            game.domain(),
            Prior::uniform(game.domain().len()),
            game.variant.weighted,
        )?),
    })
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let game = args.build()?;
            let efg = build_full_game(&game.oracle, &game.variant, DEFAULT_NODE_BUDGET)?;
            let iterations = args.iterations.unwrap_or(10_000);
            let profile = cfr_solve_with(
                &efg,
                &CfrOptions {
                    iterations,
                    plus: game.variant.cfr_plus,
                    seed: game.variant.seed,
                },
            );
            println!("value {:.4}", profile.value);
            println!("exploitability {:.3e}", exploitability(&efg, &profile.strategy));
            println!("iterations {iterations}");
        }
        Command::Play {
            game: args,
            policy,
            item,
            transcript,
        } => {
            let game = args.build()?;
            let s_star = match item.parse::<usize>() {
                Ok(i) => i,
                Err(_) => game.domain().index_of(&item)?,
            };
            let policy = make_policy(policy.policy, &game)?;
            let mut rng = play_rng(game.variant.seed, s_star, 0);
            let t = play_game(s_star, policy.as_ref(), &game.oracle, &game.variant, &mut rng)?;
            match transcript {
                Some(path) => t.write_jsonl(fs::File::create(path)?)?,
                None => t.write_jsonl(io::stdout().lock())?,
            }
            eprintln!("questions {} cost {}", t.questions, t.cost);
        }
        Command::Eval {
            game: args,
            policy,
            repeats,
            out,
            csv,
            dirichlet_counts,
            dirichlet_k,
            dirichlet_samples,
            adversarial_alpha,
            adversarial_samples,
        } => {
            let game = args.build()?;
            let policy = make_policy(policy.policy, &game)?;
            let repeats = repeats.unwrap_or(if policy.is_deterministic() { 1 } else { 10 });
            let mut report =
                eval_worst_case(policy.as_ref(), &game.oracle, &game.variant, repeats, game.variant.seed)?;
            let n = game.domain().len();
            let mut rng = ChaCha8Rng::seed_from_u64(game.variant.seed ^ 0x5eed_d1c7);
            if !dirichlet_counts.is_empty() {
                let priors = (0..dirichlet_samples)
                    .map(|_| sample_dirichlet_prior(&dirichlet_counts, dirichlet_k, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                report.add_average_cases("dirichlet", &priors)?;
            }
            for alpha in adversarial_alpha {
                let counts = adversarial_counts(n, alpha);
                let priors = (0..adversarial_samples)
                    .map(|_| sample_dirichlet_prior(&counts, 1.0, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                report.add_average_cases(&format!("adversarial-{alpha}"), &priors)?;
            }
            write_or_print(out.as_ref(), &report.to_json()?)?;
            if let Some(path) = csv {
                fs::write(path, report.to_csv())?;
            }
            eprintln!("l_worst {} weighted_worst {}", report.l_worst, report.weighted_worst);
        }
        Command::Br { game: args, prior } => {
            let game = args.build()?;
            let prior = if prior.is_empty() {
                Prior::uniform(game.domain().len())
            } else {
                Prior::new(prior)?
            };
            let (_, result) = backward_induction_br(&game.oracle, prior, game.variant.weighted)?;
            println!("expected_cost {}", format_cost(result.expected_cost));
            if let Some(id) = result.first_question {
                println!("first_question {id}");
            }
        }
        Command::Fullgame(args) => {
            let game = args.build()?;
            let n = game.domain().len();
            let efg = build_full_game(&game.oracle, &game.variant, DEFAULT_NODE_BUDGET)?;
            let iterations = args.iterations.unwrap_or(20_000);
            let profile = cfr_solve_with(
                &efg,
                &CfrOptions {
                    iterations,
                    plus: game.variant.cfr_plus,
                    seed: game.variant.seed,
                },
            );
            let mut full = game.variant.clone();
            full.d = n;
            let got = exact_expected_costs(&GotPolicy::new(full), &game.oracle, &game.variant)?;
            let uot = exact_expected_costs(&UotPolicy::new(game.variant.d), &game.oracle, &game.variant)?;
            let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let summary = json!({
                "items": n,
                "value": profile.value,
                "exploitability": exploitability(&efg, &profile.strategy),
                "got_full_depth_worst": worst(&got),
                "uot_worst": worst(&uot),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Interactive(args) => interactive(&args.build()?)?,
    }
    Ok(())
}

/// Prints costs that are integers or short decimals without trailing noise.
fn format_cost(x: f64) -> String {
    let rounded = (x * 1e9).round() / 1e9;
    format!("{rounded}")
}

fn interactive(game: &Game) -> Result<()> {
    let policy = GotPolicy::new(game.variant.clone());
    let domain = game.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(game.variant.seed);
    let mut state = PlayState::initial(domain);
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    println!("Think of one of: {}", domain.names_of(&state.live).join(", "));
    while !state.is_terminal() {
        let decision = policy.decide(&state, &game.oracle)?;
        let i = sample_index(&decision.probs, &mut rng);
        let q = &decision.options[i];
        let answer = loop {
            print!("{} [y/n] ", q.label());
            io::stdout().flush()?;
            let line = match lines.next() {
                Some(l) => l?,
                None => return Err(Error::InvalidConfig("input closed".into())),
            };
            match line.trim().to_ascii_lowercase().as_str() {
                "y" | "yes" => break true,
                "n" | "no" => break false,
                _ => println!("please answer y or n"),
            }
        };
        state = state.advance(&decision, i, answer, &game.oracle)?;
        if state.live.is_empty() {
            return Err(Error::InconsistentTranscript);
        }
    }
    let item = state.live.only().unwrap_or_default();
    println!(
        "It is {} ({} questions)",
        domain.name(item),
        state.history.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
