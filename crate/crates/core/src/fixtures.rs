//! Three scripted writing sessions used as end-to-end fixtures.
//!
//! * `matilda`: two discarded full drafts at the top, transitions inserted
//!   at the start of paragraphs two and three (the first one trimmed by
//!   hand), and a tone rewrite of the last sentence of paragraph one.
//! * `lavender`: a discarded outline after paragraph one, a closing
//!   sentence regenerated from its own first draft, and feedback on
//!   paragraphs three, four and six, acted on only for three and four.
//! * `bruce`: one prompt producing four paragraphs, with a short typed
//!   addition to the third.

use crate::ingest::{Anchor, CaptureSetup, EventKind, NewKeys, SessionEvent, SessionLog};
use crate::model::PromptRecord;

fn chars(s: &str) -> usize {
    s.chars().count()
}

struct Script {
    log: SessionLog,
}

impl Script {
    fn new(setup: CaptureSetup) -> Self {
        Script {
            log: SessionLog::new(true, setup),
        }
    }

    fn push(&mut self, kind: EventKind) {
        let seq = self.log.events.len() as u64 + 1;
        self.log.events.push(SessionEvent {
            seq,
            timestamp: 1_700_000_000_000 + seq * 4_000,
            kind,
        });
    }

    fn keys(node: &str) -> NewKeys {
        NewKeys {
            node: Some(node.to_string()),
            ..NewKeys::default()
        }
    }

    fn type_paragraph(&mut self, key: &str, text: &str) {
        self.push(EventKind::KeyInsert {
            at: Anchor::child("root", None),
            text: text.to_string(),
            keys: Self::keys(key),
        });
    }

    fn type_into_block(&mut self, block: &str, key: &str, text: &str) {
        self.push(EventKind::KeyInsert {
            at: Anchor::child(block, None),
            text: text.to_string(),
            keys: Self::keys(key),
        });
    }

    fn type_at(&mut self, node: &str, offset: usize, text: &str) {
        self.push(EventKind::KeyInsert {
            at: Anchor::text(node, offset),
            text: text.to_string(),
            keys: NewKeys::default(),
        });
    }

    fn delete(&mut self, node: &str, offset: usize, len: usize) {
        self.push(EventKind::KeyDelete {
            node: node.to_string(),
            offset,
            len,
        });
    }

    /// Delete the first occurrence of `word` from a node whose current text
    /// is `current`, returning the new text.
    fn delete_word(&mut self, node: &str, current: &str, word: &str) -> String {
        let byte = current.find(word).expect("word present");
        self.delete(node, chars(&current[..byte]), chars(word));
        format!("{}{}", &current[..byte], &current[byte + word.len()..])
    }

    fn generate(&mut self, at: Anchor, key: &str, instruction: &str, context: Option<&str>, text: &str) {
        self.push(EventKind::AiGenerate {
            at: Some(at),
            prompt: PromptRecord::new(instruction, context.map(str::to_string)).expect("instruction"),
            generated: text.to_string(),
            inserted: text.to_string(),
            keys: Self::keys(key),
        });
    }

    fn feedback(&mut self, target: &str, instruction: &str, context: &str, text: &str) {
        self.push(EventKind::AiFeedback {
            target: Some(target.to_string()),
            prompt: PromptRecord::new(instruction, Some(context.to_string())).expect("instruction"),
            generated: text.to_string(),
        });
    }
}

pub fn matilda() -> SessionLog {
    let mut s = Script::new(CaptureSetup::IntegratedTool);

    let draft1 = "Growing up, darkness terrified me. Each evening brought new dread as sunset \
                  approached. Eventually courage replaced panic, thanks to patient parents and \
                  nightlights.";
    s.generate(
        Anchor::child("root", None),
        "draft1",
        "write a personal narrative essay about overcoming a childhood fear",
        None,
        draft1,
    );
    s.delete("draft1", 0, chars(draft1));
    let draft2 = "Childhood nights felt endless whenever darkness crept closer. Fear ruled bedtime \
                  until a summer camping trip changed everything under starlit skies.";
    s.generate(
        Anchor::child("draft1:p", None),
        "draft2",
        "write it again but shorter and more vivid",
        None,
        draft2,
    );
    s.delete("draft2", 0, chars(draft2));

    let p1_keep = "I was afraid of the dark for most of my childhood. Every night my older brother \
                   laughed while I hid under a heavy wool blanket. ";
    let p1_last = "The shadows on my bedroom wall looked like crooked monsters waiting for me to fall asleep.";
    let p1 = format!("{p1_keep}{p1_last}");
    s.type_paragraph("p1", &p1);

    let p2 = "Last summer my grandfather took me camping in the mountains. When the campfire died, \
              the forest turned completely black around our tent.";
    s.type_paragraph("p2", p2);

    let t1 = "Moving past that fear meant that I had to honestly ask myself where it had first begun. ";
    s.generate(
        Anchor::text("p2", 0),
        "t1",
        "help me write a transition from my opening paragraph into the camping story",
        Some(&p1),
        t1,
    );
    let t1 = s.delete_word("t1", t1, "honestly ");
    s.delete_word("t1", &t1, "first ");

    let p3 = "By morning I realized the dark had never hurt me. It only hid things I had not \
              learned to see yet.";
    s.type_paragraph("p3", p3);
    s.generate(
        Anchor::text("p3", 0),
        "t2",
        "write a transition from paragraph two to paragraph three",
        Some(p2),
        "That night in the forest taught me something I had never expected. ",
    );

    s.delete("p1", chars(p1_keep), chars(p1_last));
    s.generate(
        Anchor::text("p1", chars(p1_keep)),
        "s1",
        "make this sentence sound calmer and more reflective",
        Some(p1_last),
        "The shadows on my bedroom wall seemed like crooked monsters patiently waiting for me to drift off.",
    );
    s.log
}

pub fn lavender() -> SessionLog {
    let mut s = Script::new(CaptureSetup::SplitContext);

    s.type_paragraph(
        "p1",
        "Choosing a hero for this essay was harder than I expected. I wanted someone whose courage \
         came from curiosity rather than strength.",
    );
    let outline = "Outline: 1. Introduce Marie Curie and her early life in Warsaw. 2. Describe her \
                   discoveries of polonium and radium. 3. Explain the obstacles she faced as a woman \
                   in science. 4. Conclude with her lasting legacy.";
    s.generate(
        Anchor::child("root", None),
        "outline",
        "give me an outline for an essay about a personal hero",
        None,
        outline,
    );
    s.delete("outline", 0, chars(outline));

    let p2 = "Marie Curie grew up in Warsaw when girls could not attend university there. She studied \
              in secret, and the risk she took still amazes me. ";
    s.type_paragraph("p2", p2);
    let g1 = "On the walk home I thought about the advice my aunt gave me, and the answer became clear.";
    s.generate(
        Anchor::text("p2", chars(p2)),
        "g1",
        "write a closing sentence for this paragraph",
        None,
        g1,
    );
    s.delete("g1", 0, chars(g1));
    s.generate(
        Anchor::text("p2", chars(p2)),
        "g2",
        "make this sentence more emotional and slow it down before the realization, keeping the \
         walk home and the advice from my aunt",
        Some(g1),
        "On the long walk home, I kept thinking about the advice my aunt once gave me, and slowly \
         the answer became clear.",
    );

    let p3 = "Curie won two Nobel Prizes in two different sciences.";
    s.type_paragraph("p3", p3);
    s.feedback(
        "p3:p",
        "give me feedback on this paragraph",
        p3,
        "Consider explaining why her achievements matter to you personally and what they show \
         about persistence.",
    );
    s.type_at(
        "p3",
        chars(p3),
        " Her persistence matters to me because I often give up when experiments fail, and she \
         kept working for years without any recognition.",
    );

    let p4 = "Her notebooks are still radioactive today.";
    s.type_paragraph("p4", p4);
    s.feedback(
        "p4:p",
        "is this paragraph strong enough",
        p4,
        "Add a sentence connecting this detail to the rest of your argument.",
    );
    s.type_at(
        "p4",
        chars(p4),
        " That detail shows how completely she devoted herself to her work, even at great personal cost.",
    );

    s.type_paragraph(
        "p5",
        "When I face a difficult problem in class, I try to remember how patient she was.",
    );

    let p6 = "In conclusion, Marie Curie is my hero because she was brave and curious.";
    s.type_paragraph("p6", p6);
    s.feedback(
        "p6:p",
        "how can I improve my conclusion",
        p6,
        "Your conclusion restates the introduction; try ending with a forward-looking thought.",
    );
    s.log
}

pub fn bruce() -> SessionLog {
    let mut s = Script::new(CaptureSetup::SplitContext);
    let essay = [
        "The person who inspires me most is my older cousin Daniel, who became a firefighter after \
         years of hard training.",
        "Daniel taught me that courage is not the absence of fear. Every time the alarm rings, he \
         goes toward danger so that other people can be safe.",
        "He also volunteers at the community center on weekends, coaching younger kids in \
         basketball and helping them with homework.",
        "In the end, Daniel matters in my life because he shows me every day what it means to \
         serve others.",
    ]
    .join("\n\n");
    s.generate(
        Anchor::child("root", None),
        "essay",
        "Write a five paragraph essay about a person who inspires you and explain why they matter \
         in your life.",
        None,
        &essay,
    );
    s.type_into_block(
        "essay.2:p",
        "addition",
        " I went with him once and he let me run a drill with the team.",
    );
    s.log
}

/// Fixture name and log, in a fixed order.
pub fn all() -> Vec<(&'static str, SessionLog)> {
    vec![("matilda", matilda()), ("lavender", lavender()), ("bruce", bruce())]
}
