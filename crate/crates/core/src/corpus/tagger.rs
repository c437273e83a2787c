//! Part-of-speech tagging and lemmatization.
//!
//! Taggers are pluggable through [`PosTagger`]. The bundled [`RuleTagger`]
//! is a context-free English tagger built from a closed-class lexicon, a
//! cooking-verb lexicon and suffix rules. Its lemmas are fixpoints: tagging
//! a lemma again returns the same lemma with a content tag, which keeps
//! [`crate::corpus::preprocess`] idempotent.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::text::is_number_token;

/// Coarse universal part-of-speech classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Number,
    Determiner,
    Pronoun,
    Adposition,
    Conjunction,
    Auxiliary,
    Particle,
    Interjection,
    Other,
}

impl Pos {
    /// The five classes kept by the content filter.
    pub fn is_content(self) -> bool {
        matches!(
            self,
            Pos::Noun | Pos::Verb | Pos::Adjective | Pos::Adverb | Pos::Number
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub pos: Pos,
    /// Lowercase lemma.
    pub lemma: String,
}

/// Tags a sequence of surface tokens, one output per input token.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[&str]) -> Vec<TaggedToken>;
}

/// Suffix-and-lexicon English tagger.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleTagger;

impl RuleTagger {
    pub fn new() -> Self {
        RuleTagger
    }

    /// Tags and lemmatizes a single word.
    pub fn analyze(&self, word: &str) -> TaggedToken {
        let lower = word.to_lowercase();
        if let Some(&pos) = lexicon().closed.get(lower.as_str()) {
            return TaggedToken { pos, lemma: lower };
        }
        if is_number_token(&lower) || lexicon().numbers.contains(lower.as_str()) {
            return TaggedToken {
                pos: Pos::Number,
                lemma: lower,
            };
        }
        let (pos, mut lemma) = step(&lower);
        // Iterate to a fixpoint; never land on a closed-class word.
        for _ in 0..4 {
            let (_, next) = step(&lemma);
            if next == lemma || next.is_empty() || lexicon().closed.contains_key(next.as_str()) {
                break;
            }
            lemma = next;
        }
        if lemma.is_empty() || lexicon().closed.contains_key(lemma.as_str()) {
            lemma = lower;
        }
        TaggedToken { pos, lemma }
    }
}

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<TaggedToken> {
        tokens.iter().map(|t| self.analyze(t)).collect()
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn strip<'a>(s: &'a str, suffix: &str) -> &'a str {
    &s[..s.len() - suffix.len()]
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Undoes consonant doubling ("stirr" -> "stir").
fn undouble(stem: &str) -> Option<&str> {
    let mut it = stem.chars().rev();
    let (a, b) = (it.next()?, it.next()?);
    if a == b && !is_vowel(a) && !matches!(a, 'l' | 's' | 'z') && a.is_alphabetic() {
        Some(&stem[..stem.len() - a.len_utf8()])
    } else {
        None
    }
}

/// Recovers a verb base from a stem left after removing -ing/-ed.
fn verb_base(stem: &str) -> String {
    let lex = lexicon();
    if lex.verbs.contains(stem) {
        return stem.to_string();
    }
    let with_e = format!("{stem}e");
    if lex.verbs.contains(with_e.as_str()) {
        return with_e;
    }
    if let Some(u) = undouble(stem) {
        return u.to_string();
    }
    stem.to_string()
}

fn noun_singular(word: &str) -> String {
    let lex = lexicon();
    if let Some(&s) = lex.irregular.get(word) {
        return s.to_string();
    }
    let n = char_len(word);
    if n <= 3 || lex.invariant.contains(word) {
        return word.to_string();
    }
    if word.ends_with("ies") && n > 4 {
        return format!("{}y", strip(word, "ies"));
    }
    for suf in ["ches", "shes", "sses", "xes", "zes", "oes"] {
        if word.ends_with(suf) {
            return strip(word, "es").to_string();
        }
    }
    for keep in ["ss", "us", "is", "ous"] {
        if word.ends_with(keep) {
            return word.to_string();
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        return stem.to_string();
    }
    word.to_string()
}

/// One round of open-class tagging and lemmatization.
fn step(word: &str) -> (Pos, String) {
    let lex = lexicon();
    if word.is_empty() {
        return (Pos::Other, String::new());
    }
    if let Some(&lemma) = lex.irregular_verbs.get(word) {
        return (Pos::Verb, lemma.to_string());
    }
    if lex.verbs.contains(word) {
        return (Pos::Verb, word.to_string());
    }
    if lex.adjectives.contains(word) {
        return (Pos::Adjective, word.to_string());
    }
    if lex.adverbs.contains(word) {
        return (Pos::Adverb, word.to_string());
    }
    if let Some(&s) = lex.irregular.get(word) {
        return (Pos::Noun, s.to_string());
    }
    if lex.nouns.contains(word) || lex.invariant.contains(word) {
        return (Pos::Noun, word.to_string());
    }
    let n = char_len(word);

    // Third-person verb forms of known verbs.
    if let Some(stem) = word.strip_suffix("ies") {
        let base = format!("{stem}y");
        if lex.verbs.contains(base.as_str()) {
            return (Pos::Verb, base);
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if lex.verbs.contains(stem) {
            return (Pos::Verb, stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if lex.verbs.contains(stem) {
            return (Pos::Verb, stem.to_string());
        }
    }

    if n > 5 && word.ends_with("ing") {
        return (Pos::Verb, verb_base(strip(word, "ing")));
    }
    if n > 4 && word.ends_with("ied") {
        return (Pos::Verb, format!("{}y", strip(word, "ied")));
    }
    if n > 4 && word.ends_with("ed") && !word.ends_with("eed") {
        let minus_d = strip(word, "d");
        if lex.verbs.contains(minus_d) {
            return (Pos::Verb, minus_d.to_string());
        }
        return (Pos::Verb, verb_base(strip(word, "ed")));
    }
    if n > 4 && word.ends_with("ly") {
        return (Pos::Adverb, word.to_string());
    }
    for suf in ADJ_SUFFIXES {
        if n > suf.len() + 2 && word.ends_with(suf) {
            return (Pos::Adjective, word.to_string());
        }
    }
    (Pos::Noun, noun_singular(word))
}

const ADJ_SUFFIXES: &[&str] = &[
    "ous", "ful", "ive", "able", "ible", "ish", "less", "ic", "ical", "al", "ese", "ian", "ean",
];

struct Lexicon {
    closed: HashMap<&'static str, Pos>,
    numbers: HashSet<&'static str>,
    verbs: HashSet<&'static str>,
    irregular_verbs: HashMap<&'static str, &'static str>,
    adjectives: HashSet<&'static str>,
    adverbs: HashSet<&'static str>,
    nouns: HashSet<&'static str>,
    irregular: HashMap<&'static str, &'static str>,
    invariant: HashSet<&'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| {
        let mut closed = HashMap::new();
        for (words, pos) in [
            (DETERMINERS, Pos::Determiner),
            (PRONOUNS, Pos::Pronoun),
            (ADPOSITIONS, Pos::Adposition),
            (CONJUNCTIONS, Pos::Conjunction),
            (AUXILIARIES, Pos::Auxiliary),
            (PARTICLES, Pos::Particle),
            (INTERJECTIONS, Pos::Interjection),
        ] {
            for w in words.split_whitespace() {
                closed.insert(w, pos);
            }
        }
        let set = |s: &'static str| s.split_whitespace().collect::<HashSet<_>>();
        let pairs = |s: &'static str| {
            s.split_whitespace()
                .filter_map(|p| p.split_once(':'))
                .collect::<HashMap<_, _>>()
        };
        Lexicon {
            closed,
            numbers: set(NUMBER_WORDS),
            verbs: set(VERBS),
            irregular_verbs: pairs(IRREGULAR_VERBS),
            adjectives: set(ADJECTIVES),
            adverbs: set(ADVERBS),
            nouns: set(NOUNS),
            irregular: pairs(IRREGULAR_NOUNS),
            invariant: set(INVARIANT_NOUNS),
        }
    })
}

const DETERMINERS: &str = "the a an this that these those each every some any no all both either neither another such what which whatever";
const PRONOUNS: &str = "i me my mine myself we us our ours ourselves you your yours yourself yourselves he him his himself she her hers herself it its itself they them their theirs themselves who whom whose one's something anything nothing everything someone";
const ADPOSITIONS: &str = "of in on at by for with from into onto upon over under about above below across after against along among around before behind beneath beside between beyond during except inside near off out outside through throughout toward towards underneath until unto via within without per like than";
const CONJUNCTIONS: &str =
    "and or but nor yet so if because while whereas although though unless whether once since as";
const AUXILIARIES: &str = "be is are was were been being am have has had having do does did doing can could will would shall should may might must";
const PARTICLES: &str = "to not n't s t";
const INTERJECTIONS: &str = "oh yes please voila ok okay wow";

const NUMBER_WORDS: &str = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty thirty forty fifty sixty seventy eighty ninety hundred thousand dozen";

const ADVERBS: &str = "then also just only now again too very well often always never still even almost soon later here there together away back forward aside meanwhile instead first next finally already enough less more most much little rather quite";

const ADJECTIVES: &str = "ground hot cold warm cool fresh dry wet large small big medium thick thin soft hard smooth crisp crispy tender golden brown white black red green yellow sweet sour salty spicy bitter rich light dark heavy whole raw ripe lean clean new old good great fine coarse even firm tough sticky creamy fluffy juicy flaky chunky deep shallow high low long short full empty ready other same extra few many additional remaining entire separate traditional authentic novel unique different original prototypical creative surprising desirable useful";

const NOUNS: &str = "salt taste pepper garlic onion oil sugar butter flour egg water milk powder parsley rice couscous chicken beef lamb pork fish tomato potato carrot cumin cinnamon ginger lemon lime vinegar sauce stock broth pot pan bowl oven skillet lid dish plate minute hour heat temperature degree mixture dough batter cup spoon knife cream cheese honey bread meat vegetable fruit herb spice leaf seed juice zest wine bean pea corn nut almond raisin date chickpea lentil yogurt paprika saffron turmeric coriander cilantro mint basil thyme oregano rosemary dill bay chili chile olive apple banana orange mango coconut stew soup salad cake pie tart sandwich noodle pasta dumpling tortilla curry sauce side top bottom center edge surface piece slice cube strip half quarter pinch dash serving portion recipe ingredient time room fork spatula sheet tray rack foil paper towel grill wok steamer jar glass bag frying";

const INVARIANT_NOUNS: &str = "couscous hummus asparagus citrus octopus gas lens molasses swiss series species grass glass dress class bass moss cress hibiscus analysis basis";

const IRREGULAR_NOUNS: &str = "leaves:leaf halves:half knives:knife loaves:loaf calves:calf wolves:wolf shelves:shelf children:child men:man women:woman feet:foot teeth:tooth geese:goose mice:mouse cookies:cookie pieces:piece sauces:sauce spices:spice slices:slice juices:juice dices:dice olives:olive chives:chive cloves:clove anchovies:anchovy sizes:size pastries:pastry cherries:cherry berries:berry";

const IRREGULAR_VERBS: &str = "made:make making:make took:take taken:take taking:take got:get gotten:get getting:get gave:give given:give giving:give let:let letting:let put:put putting:put cut:cut cutting:cut set:set setting:set left:leave leaving:leave kept:keep keeping:keep brought:bring bringing:bring became:become becoming:become began:begin begun:begin beginning:begin ate:eat eaten:eat eating:eat froze:freeze frozen:freeze freezing:freeze stuck:stick sticking:stick shook:shake shaken:shake shaking:shake rose:rise risen:rise rising:rise fried:fry frying:fry dried:dry drying:dry grinding:grind spread:spread spreading:spread beat:beat beaten:beat beating:beat";

const VERBS: &str = "add stir mix bake boil simmer cook heat fry saute sauté roast grill steam poach blend whisk beat chop dice mince slice peel grate crush mash knead roll fold pour drain rinse wash soak marinate season sprinkle serve garnish cover remove place combine bring reduce melt toast brown cool chill refrigerate freeze preheat transfer arrange layer spread brush drizzle squeeze cut shred toss coat dip stuff wrap fill top pound tenderize flip turn set let leave keep cool rest divide shape form press strain sift measure weigh scoop spoon ladle pat dry thaw warm reheat broil sear braise stew caramelize thicken dissolve repeat continue begin finish enjoy make prepare use need take put get give allow check taste adjust puree purée process pulse crack separate break skim baste glaze score trim debone fillet butterfly core pit seed zest juice infuse steep ferment proof rise grind crumble cube julienne quarter halve skewer bake cream soften whip scramble char smoke cure pickle flavor flavour discard reserve return increase lower sit wait stand begin start stop";
