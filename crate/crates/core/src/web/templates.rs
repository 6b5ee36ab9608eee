//! Page templates. Instantiation is a pure function of (template, page index,
//! seed, cart size).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::page::{Binding, DomBuilder, Effect, NativeDialog, NativeDialogKind, VirtualPage};
use super::WebError;
use crate::snapshot::{NodeRole, NodeStates};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case")]
pub enum PageTemplate {
    Form(#[serde(default)] FormParams),
    Products(#[serde(default)] ProductParams),
    DialogStack(#[serde(default)] DialogStackParams),
    Article(#[serde(default)] ArticleParams),
    Profile(#[serde(default)] ProfileParams),
    Blank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Text,
    Select,
    CustomDropdown,
    Radio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormParams {
    pub field_count: usize,
    /// Explicit kind per field; the default mix is mostly text inputs
    /// followed by selects, custom dropdowns and radio groups.
    pub kinds: Option<Vec<FieldKind>>,
    /// Field index that starts focused. `None` focuses the weight field when present.
    pub autofocus: Option<usize>,
    pub required: bool,
    pub order_number: String,
    pub confirmation_delay: u64,
    pub url: String,
}

impl Default for FormParams {
    fn default() -> Self {
        FormParams {
            field_count: 28,
            kinds: None,
            autofocus: None,
            required: true,
            order_number: "12345".into(),
            confirmation_delay: 3,
            url: "https://forms.example/shipping".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProductParams {
    pub page_count: usize,
    pub items_per_page: usize,
    /// Overrides the session seed for price generation.
    pub price_seed: Option<u64>,
    pub price_min: u32,
    pub price_max: u32,
    pub url: String,
}

impl Default for ProductParams {
    fn default() -> Self {
        ProductParams {
            page_count: 5,
            items_per_page: 10,
            price_seed: None,
            price_min: 10,
            price_max: 99,
            url: "https://shop.example/products".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialogStackParams {
    pub depth: usize,
    pub url: String,
}

impl Default for DialogStackParams {
    fn default() -> Self {
        DialogStackParams {
            depth: 2,
            url: "https://app.example/settings".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArticleParams {
    pub paragraph_count: usize,
    /// Exact character length of each paragraph.
    pub paragraph_len: usize,
    pub nav_links: usize,
    pub url: String,
}

impl Default for ArticleParams {
    fn default() -> Self {
        ArticleParams {
            paragraph_count: 20,
            paragraph_len: 140,
            nav_links: 5,
            url: "https://news.example/article".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileParams {
    pub thread_count: usize,
    pub url: String,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            thread_count: 5,
            url: "https://social.example/in/jane-roe".into(),
        }
    }
}

/// Inputs to instantiation besides the template itself.
#[derive(Debug, Clone, Copy)]
pub struct TemplateContext {
    pub seed: u64,
    pub page_id: u64,
    pub cart_count: usize,
}

const TEXT_LABELS: [&str; 20] = [
    "Full name",
    "Email address",
    "Phone number",
    "Company",
    "Address line 1",
    "Address line 2",
    "City",
    "State or province",
    "Postal code",
    "Order reference",
    "Recipient name",
    "Recipient phone",
    "Delivery instructions",
    "Package count",
    "Package length (cm)",
    "Package width (cm)",
    "Package height (cm)",
    "Total Weight (kg)",
    "Declared value",
    "Contents description",
];

const SELECTS: [(&str, &[&str]); 3] = [
    ("Country", &["USA", "Canada", "Mexico", "Germany"]),
    ("Shipping speed", &["Standard", "Express", "Overnight"]),
    ("Package type", &["Box", "Envelope", "Tube"]),
];

const DROPDOWNS: [(&str, &[&str]); 2] = [
    ("Carrier", &["Northwind", "Contoso Freight", "Fabrikam Post"]),
    ("Insurance", &["None", "Basic", "Full"]),
];

const RADIOS: [(&str, &[&str]); 3] = [
    ("Signature required", &["Yes", "No"]),
    ("Fragile contents", &["Yes", "No"]),
    ("Gift wrap", &["Yes", "No"]),
];

const FILLER: [&str; 16] = [
    "market", "report", "quarter", "analysts", "growth", "policy", "region", "supply",
    "demand", "survey", "index", "review", "energy", "transport", "budget", "outlook",
];

/// Text label of the `i`th text field.
pub fn text_label(i: usize) -> String {
    TEXT_LABELS
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Text field {}", i + 1))
}

/// A form field as laid out by the form template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormField {
    pub kind: FieldKind,
    pub label: String,
    pub options: Vec<String>,
}

impl FormParams {
    pub fn field_kinds(&self) -> Vec<FieldKind> {
        if let Some(kinds) = &self.kinds {
            return kinds.clone();
        }
        let n = self.field_count;
        let selects = (n / 9).min(SELECTS.len());
        let dropdowns = (n / 14).min(DROPDOWNS.len());
        let radios = (n / 9).min(RADIOS.len());
        let text = n - selects - dropdowns - radios;
        std::iter::repeat_n(FieldKind::Text, text)
            .chain(std::iter::repeat_n(FieldKind::Select, selects))
            .chain(std::iter::repeat_n(FieldKind::CustomDropdown, dropdowns))
            .chain(std::iter::repeat_n(FieldKind::Radio, radios))
            .collect()
    }

    pub fn fields(&self) -> Vec<FormField> {
        let (mut t, mut s, mut d, mut r) = (0, 0, 0, 0);
        let owned = |opts: &[&str]| opts.iter().map(|o| o.to_string()).collect::<Vec<_>>();
        self.field_kinds()
            .into_iter()
            .map(|kind| {
                let (label, options) = match kind {
                    FieldKind::Text => {
                        t += 1;
                        (text_label(t - 1), Vec::new())
                    }
                    FieldKind::Select => {
                        s += 1;
                        let (l, o) = SELECTS[(s - 1) % SELECTS.len()];
                        (suffix(l, (s - 1) / SELECTS.len()), owned(o))
                    }
                    FieldKind::CustomDropdown => {
                        d += 1;
                        let (l, o) = DROPDOWNS[(d - 1) % DROPDOWNS.len()];
                        (suffix(l, (d - 1) / DROPDOWNS.len()), owned(o))
                    }
                    FieldKind::Radio => {
                        r += 1;
                        let (l, o) = RADIOS[(r - 1) % RADIOS.len()];
                        (suffix(l, (r - 1) / RADIOS.len()), owned(o))
                    }
                };
                FormField { kind, label, options }
            })
            .collect()
    }

    /// Accessible name of a field's input element.
    pub fn input_name(&self, label: &str) -> String {
        if self.required {
            format!("{label} Required question")
        } else {
            label.to_string()
        }
    }
}

fn suffix(label: &str, round: usize) -> String {
    if round == 0 {
        label.to_string()
    } else {
        format!("{label} {}", round + 1)
    }
}

/// Seeded price of every product across all listing pages.
pub fn product_prices(params: &ProductParams, session_seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.price_seed.unwrap_or(session_seed));
    (0..params.page_count * params.items_per_page)
        .map(|_| rng.random_range(params.price_min..=params.price_max))
        .collect()
}

pub fn product_label(index: usize) -> String {
    format!("Product {:04}", index + 1)
}

pub fn products_page_url(params: &ProductParams, page: usize) -> String {
    format!("{}?page={}", params.url, page + 1)
}

/// Paragraph texts and the fact code each one carries.
pub fn article_paragraphs(params: &ArticleParams, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA57C_1E00);
    (0..params.paragraph_count)
        .map(|i| {
            let letters: String = (0..2)
                .map(|_| (b'A' + rng.random_range(0..26u8)) as char)
                .collect();
            let code = format!("{letters}-{:04}", rng.random_range(0..10_000u32));
            let mut text = format!("Paragraph {:03}. Fact code {code}.", i + 1);
            while text.len() < params.paragraph_len {
                text.push(' ');
                text.push_str(FILLER[rng.random_range(0..FILLER.len())]);
            }
            text.truncate(params.paragraph_len.max(text.find('.').unwrap_or(0) + 1));
            (code, text)
        })
        .collect()
}

impl PageTemplate {
    pub fn name(&self) -> &'static str {
        match self {
            PageTemplate::Form(_) => "form",
            PageTemplate::Products(_) => "products",
            PageTemplate::DialogStack(_) => "dialog-stack",
            PageTemplate::Article(_) => "article",
            PageTemplate::Profile(_) => "profile",
            PageTemplate::Blank => "blank",
        }
    }

    /// Parses `{"name": ..., "params": {...}}`, separating unknown names from bad params.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, WebError> {
        let name = value
            .get("name")
            .and_then(|n| n.as_str())
            .ok_or_else(|| WebError::InvalidParams("template needs a `name`".into()))?;
        const KNOWN: [&str; 6] = ["form", "products", "dialog-stack", "article", "profile", "blank"];
        if !KNOWN.contains(&name) {
            return Err(WebError::UnknownTemplate(name.to_string()));
        }
        let mut value = value.clone();
        if let Some(obj) = value.as_object_mut().filter(|_| name != "blank") {
            obj.entry("params").or_insert_with(|| serde_json::json!({}));
        }
        let t: PageTemplate = serde_json::from_value(value)
            .map_err(|e| WebError::InvalidParams(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), WebError> {
        let bad = |m: &str| Err(WebError::InvalidParams(m.to_string()));
        match self {
            PageTemplate::Form(p) => {
                let n = p.kinds.as_ref().map_or(p.field_count, Vec::len);
                if n == 0 || n > 500 {
                    return bad("form needs 1..=500 fields");
                }
                if p.kinds.as_ref().is_some_and(|k| k.len() != p.field_count) {
                    return bad("kinds must list exactly field_count entries");
                }
                if p.autofocus.is_some_and(|a| a >= n) {
                    return bad("autofocus index out of range");
                }
            }
            PageTemplate::Products(p) => {
                if p.page_count == 0 || p.page_count > 1000 {
                    return bad("products needs 1..=1000 pages");
                }
                if p.items_per_page > 5000 {
                    return bad("at most 5000 items per page");
                }
                if p.price_min > p.price_max {
                    return bad("price_min exceeds price_max");
                }
            }
            PageTemplate::DialogStack(p) => {
                if p.depth == 0 || p.depth > 8 {
                    return bad("dialog depth must be 1..=8");
                }
            }
            PageTemplate::Article(p) => {
                if p.paragraph_count > 20_000 || p.paragraph_len < 32 {
                    return bad("article needs paragraph_len >= 32 and <= 20000 paragraphs");
                }
            }
            PageTemplate::Profile(p) => {
                if p.thread_count > 1000 {
                    return bad("at most 1000 threads");
                }
            }
            PageTemplate::Blank => {}
        }
        Ok(())
    }

    /// Every URL the template serves, with its page index.
    pub fn urls(&self) -> Vec<(String, usize)> {
        match self {
            PageTemplate::Form(p) => vec![(p.url.clone(), 0)],
            PageTemplate::Products(p) => (0..p.page_count)
                .map(|i| (products_page_url(p, i), i))
                .collect(),
            PageTemplate::DialogStack(p) => vec![(p.url.clone(), 0)],
            PageTemplate::Article(p) => vec![(p.url.clone(), 0)],
            PageTemplate::Profile(p) => vec![(p.url.clone(), 0)],
            PageTemplate::Blank => vec![("about:blank".to_string(), 0)],
        }
    }

    pub fn entry_url(&self) -> String {
        self.urls().swap_remove(0).0
    }

    pub fn instantiate(&self, page_index: usize, ctx: TemplateContext) -> VirtualPage {
        match self {
            PageTemplate::Form(p) => build_form(p, ctx),
            PageTemplate::Products(p) => build_products(p, page_index, ctx),
            PageTemplate::DialogStack(p) => build_dialog_stack(p, ctx),
            PageTemplate::Article(p) => build_article(p, ctx),
            PageTemplate::Profile(p) => build_profile(p, ctx),
            PageTemplate::Blank => blank_page(ctx.page_id, "about:blank"),
        }
    }
}

pub fn blank_page(page_id: u64, url: &str) -> VirtualPage {
    DomBuilder::new(NodeRole::Generic, "").finish(page_id, url)
}

pub fn not_found_page(page_id: u64, url: &str) -> VirtualPage {
    let mut b = DomBuilder::new(NodeRole::Generic, "Not found");
    let h = b.add(b.root(), NodeRole::Heading, "Page not found");
    b.node(h).level = Some(1);
    b.finish(page_id, url)
}

fn build_form(p: &FormParams, ctx: TemplateContext) -> VirtualPage {
    let mut b = DomBuilder::new(NodeRole::Generic, "Shipping form");
    let root = b.root();
    let title = b.add(root, NodeRole::Heading, "Shipping details");
    b.node(title).level = Some(1);
    b.add(root, NodeRole::Text, "All questions are required");

    let fields = p.fields();
    let autofocus = p.autofocus.or_else(|| {
        fields
            .iter()
            .position(|f| f.kind == FieldKind::Text && f.label == "Total Weight (kg)")
    });
    let mut focus = None;
    for (i, field) in fields.iter().enumerate() {
        let name = p.input_name(&field.label);
        let heading = b.add(root, NodeRole::Heading, name.clone());
        b.node(heading).level = Some(3);
        if p.required {
            b.node(heading).description = Some("Required question".into());
        }
        let input = match field.kind {
            FieldKind::Text => {
                let id = b.add(root, NodeRole::Textbox, name.clone());
                b.bind(id, Binding::TextInput);
                if p.required {
                    b.node(id).description = Some("This is a required question".into());
                }
                id
            }
            FieldKind::Select => {
                let id = b.add(root, NodeRole::Combobox, name.clone());
                b.bind(id, Binding::Select { options: field.options.clone() });
                for o in &field.options {
                    let opt = b.add(id, NodeRole::Option, o.clone());
                    b.node(opt).states = NodeStates::empty();
                }
                id
            }
            FieldKind::CustomDropdown => {
                let id = b.add(root, NodeRole::Button, name.clone());
                b.node(id).description = Some("Custom dropdown".into());
                b.node(id).value = Some("Choose".into());
                let listbox = b.add(root, NodeRole::Listbox, format!("{} options", field.label));
                b.node(listbox).hidden = true;
                b.bind(id, Binding::DropdownToggle { listbox });
                for o in &field.options {
                    let opt = b.add(listbox, NodeRole::Option, o.clone());
                    b.bind(opt, Binding::DropdownOption { dropdown: id, listbox });
                }
                id
            }
            FieldKind::Radio => {
                let mut first = None;
                for o in &field.options {
                    let id = b.add(root, NodeRole::Radio, format!("{}: {o}", field.label));
                    b.bind(id, Binding::Radio { group: field.label.clone() });
                    first.get_or_insert(id);
                }
                first.unwrap_or(heading)
            }
        };
        if p.required && field.kind != FieldKind::Radio {
            b.node(input).states.insert(NodeStates::REQUIRED);
        }
        if autofocus == Some(i) {
            focus = Some(input);
        }
    }

    let confirmation = b.add(root, NodeRole::Text, format!("Order #{} confirmed", p.order_number));
    b.node(confirmation).hidden = true;
    let submit = b.add(root, NodeRole::Button, "Submit");
    b.bind(
        submit,
        Binding::Native(NativeDialog {
            kind: NativeDialogKind::Confirm,
            message: "Submit this form?".into(),
            on_accept: vec![Effect::After {
                ticks: p.confirmation_delay,
                effect: Box::new(Effect::Reveal(confirmation)),
            }],
            on_dismiss: Vec::new(),
            prompt_target: None,
        }),
    );
    let mut page = b.finish(ctx.page_id, p.url.clone());
    page.focused = focus;
    page
}

fn build_products(p: &ProductParams, page_index: usize, ctx: TemplateContext) -> VirtualPage {
    let prices = product_prices(p, ctx.seed);
    let mut b = DomBuilder::new(NodeRole::Generic, "Shop");
    let root = b.root();
    let h = b.add(root, NodeRole::Heading, "Products");
    b.node(h).level = Some(1);
    b.add(
        root,
        NodeRole::Text,
        format!("Page {:02} of {:02}", page_index + 1, p.page_count),
    );
    let counter = b.add(root, NodeRole::Text, format!("Cart items: {}", ctx.cart_count));
    let list = b.add(root, NodeRole::List, "Product list");
    for slot in 0..p.items_per_page {
        let idx = page_index * p.items_per_page + slot;
        let label = product_label(idx);
        let item = b.add(list, NodeRole::Listitem, label.clone());
        let title = b.add(item, NodeRole::Heading, format!("Widget {:04}", idx + 1));
        b.node(title).level = Some(3);
        b.add(item, NodeRole::Text, format!("Price: ${}.00", prices[idx]));
        let button = b.add(item, NodeRole::Button, "Add to cart");
        b.node(button).description = Some(label.clone());
        b.bind(button, Binding::AddToCart { item: label });
    }
    let nav = b.add(root, NodeRole::Generic, "Pagination");
    let prev = b.add(nav, NodeRole::Link, "Previous page");
    if page_index > 0 {
        b.bind(prev, Binding::Navigate { url: products_page_url(p, page_index - 1) });
    } else {
        b.node(prev).states.insert(NodeStates::DISABLED);
    }
    let next = b.add(nav, NodeRole::Link, "Next page");
    if page_index + 1 < p.page_count {
        b.bind(next, Binding::Navigate { url: products_page_url(p, page_index + 1) });
    } else {
        b.node(next).states.insert(NodeStates::DISABLED);
    }
    let mut page = b.finish(ctx.page_id, products_page_url(p, page_index));
    page.cart_counter = Some(counter);
    page
}

fn build_dialog_stack(p: &DialogStackParams, ctx: TemplateContext) -> VirtualPage {
    let mut b = DomBuilder::new(NodeRole::Generic, "Account settings app");
    let root = b.root();
    let h = b.add(root, NodeRole::Heading, "Account settings");
    b.node(h).level = Some(1);
    let open = b.add(root, NodeRole::Button, "Open settings");
    let status = b.add(root, NodeRole::Text, "Status: idle");
    let delete = b.add(root, NodeRole::Button, "Delete account");
    b.bind(
        delete,
        Binding::Native(NativeDialog {
            kind: NativeDialogKind::Confirm,
            message: "Delete this account permanently?".into(),
            on_accept: vec![Effect::SetName(status, "Status: account deleted".into())],
            on_dismiss: vec![Effect::SetName(status, "Status: deletion cancelled".into())],
            prompt_target: None,
        }),
    );
    let refund = b.add(root, NodeRole::Button, "Request refund");
    b.bind(
        refund,
        Binding::Effects(vec![Effect::SetName(status, "Status: refund requested".into())]),
    );
    let alert = b.add(root, NodeRole::Button, "Show alert");
    b.bind(
        alert,
        Binding::Native(NativeDialog {
            kind: NativeDialogKind::Alert,
            message: "Your session expires in 5 minutes".into(),
            on_accept: Vec::new(),
            on_dismiss: Vec::new(),
            prompt_target: None,
        }),
    );
    let display = b.add(root, NodeRole::Textbox, "Display name");
    b.bind(display, Binding::TextInput);
    b.node(display).value = Some("Jane".into());
    let rename = b.add(root, NodeRole::Button, "Rename");
    b.bind(
        rename,
        Binding::Native(NativeDialog {
            kind: NativeDialogKind::Prompt,
            message: "New display name".into(),
            on_accept: Vec::new(),
            on_dismiss: Vec::new(),
            prompt_target: Some(display),
        }),
    );
    let save = b.add(root, NodeRole::Button, "Save");
    b.node(save).states.insert(NodeStates::DISABLED);
    b.bind(save, Binding::Effects(vec![Effect::SetName(status, "Status: saved".into())]));

    let list = b.add(root, NodeRole::List, "Priorities");
    for name in ["Alpha", "Beta", "Gamma", "Delta"] {
        let item = b.add(list, NodeRole::Listitem, name);
        b.bind(item, Binding::Draggable);
    }
    let map = b.add(root, NodeRole::Generic, "Map");
    b.node(map).value = Some("0,0".into());
    b.bind(map, Binding::Scrollable);
    let more = b.add(root, NodeRole::Button, "More options");
    let menu = b.add(root, NodeRole::List, "More options menu");
    b.node(menu).hidden = true;
    let help = b.add(menu, NodeRole::Link, "Help center");
    b.bind(help, Binding::Navigate { url: "https://app.example/help".into() });
    b.bind(more, Binding::HoverReveal { target: menu });
    let upload = b.add(root, NodeRole::Button, "Attachment");
    b.node(upload).description = Some("File input".into());
    b.bind(upload, Binding::FileInput);

    let mut opener = open;
    for level in 0..p.depth {
        let title = if level == 0 {
            "Settings".to_string()
        } else {
            format!("Advanced settings {level}")
        };
        let dialog = b.add(root, NodeRole::Dialog, title.clone());
        b.node(dialog).hidden = true;
        b.bind(opener, Binding::OpenDialog { dialog });
        let check = b.add(dialog, NodeRole::Checkbox, format!("{title}: notifications"));
        b.bind(check, Binding::Checkbox);
        let field = b.add(dialog, NodeRole::Textbox, format!("{title}: label"));
        b.bind(field, Binding::TextInput);
        if level + 1 < p.depth {
            opener = b.add(dialog, NodeRole::Button, format!("Open level {}", level + 2));
        }
        let close = b.add(dialog, NodeRole::Button, format!("Close {title}"));
        b.bind(close, Binding::CloseDialog { dialog });
    }
    b.finish(ctx.page_id, p.url.clone())
}

fn build_article(p: &ArticleParams, ctx: TemplateContext) -> VirtualPage {
    let mut b = DomBuilder::new(NodeRole::Generic, "News");
    let root = b.root();
    let nav = b.add(root, NodeRole::Generic, "Site navigation");
    b.node(nav).print_hidden = true;
    const SECTIONS: [&str; 8] = [
        "Home", "World", "Business", "Technology", "Science", "Sports", "Culture", "Opinion",
    ];
    for i in 0..p.nav_links {
        let name = SECTIONS.get(i).map_or_else(|| format!("Section {}", i + 1), |s| s.to_string());
        let link = b.add(nav, NodeRole::Link, name.clone());
        b.bind(
            link,
            Binding::Navigate {
                url: format!("https://news.example/{}", name.to_lowercase()),
            },
        );
    }
    let h = b.add(root, NodeRole::Heading, "Quarterly outlook");
    b.node(h).level = Some(1);
    b.add(root, NodeRole::Text, "By the data desk");
    let body = b.add(root, NodeRole::Generic, "Article body");
    for (_, text) in article_paragraphs(p, ctx.seed) {
        b.add(body, NodeRole::Text, text);
    }
    let notes = b.add(root, NodeRole::Generic, "Notes");
    let note = b.add(notes, NodeRole::Textbox, "Note");
    b.bind(note, Binding::TextInput);
    let save = b.add(notes, NodeRole::Button, "Save note");
    let counter = b.add(notes, NodeRole::Text, "Saved notes: 000");
    b.bind(save, Binding::SaveNote { source: note, counter });
    let next = b.add(root, NodeRole::Link, "Next article");
    b.bind(next, Binding::Navigate { url: "https://news.example/next".into() });
    let ad = b.add(root, NodeRole::Generic, "Advertisement");
    b.node(ad).print_hidden = true;
    b.add(ad, NodeRole::Text, "Sponsored: upgrade your plan today");
    b.finish(ctx.page_id, p.url.clone())
}

fn build_profile(p: &ProfileParams, ctx: TemplateContext) -> VirtualPage {
    let mut b = DomBuilder::new(NodeRole::Generic, "Profile page");
    let root = b.root();
    let search = b.add(root, NodeRole::Textbox, "Search");
    b.bind(search, Binding::TextInput);
    let h = b.add(root, NodeRole::Heading, "Jane Roe");
    b.node(h).level = Some(1);
    b.add(root, NodeRole::Text, "Staff engineer at Example Corp");
    let connect = b.add(root, NodeRole::Button, "Connect");
    b.bind(connect, Binding::Effects(Vec::new()));
    let exp = b.add(root, NodeRole::List, "Experience");
    for (role, years) in [("Staff engineer", "2021-now"), ("Senior engineer", "2017-2021")] {
        let item = b.add(exp, NodeRole::Listitem, role);
        b.add(item, NodeRole::Text, years);
    }
    let inbox = b.add(root, NodeRole::Generic, "Messaging");
    for i in 0..p.thread_count {
        let thread = b.add(inbox, NodeRole::Listitem, format!("Conversation {}", i + 1));
        b.add(thread, NodeRole::Text, format!("Private message body {}", i + 1));
        let reply = b.add(thread, NodeRole::Button, "Reply");
        b.bind(reply, Binding::Effects(Vec::new()));
    }
    let send = b.add(root, NodeRole::Button, "Send message");
    b.bind(send, Binding::Effects(Vec::new()));
    b.finish(ctx.page_id, p.url.clone())
}
