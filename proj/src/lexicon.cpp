#include "ragsynth/lexicon.hpp"

#include <fstream>

#include "ragsynth/common.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::lexicon {

const std::vector<std::string>& default_financial_terms() {
    static const std::vector<std::string> terms = {
        "account", "account number", "ach", "adjustable-rate mortgage", "amortization",
        "annual fee", "annuity", "apr", "apy", "arbitrage",
        "asset", "asset allocation", "atm", "atm fee", "auto loan",
        "available balance", "balance", "balance transfer", "balloon payment", "bank statement",
        "bankruptcy", "basis point", "beneficiary", "bill pay", "bond",
        "borrower", "branch", "brokerage", "budget", "business checking",
        "capital", "capital gains", "cash advance", "cash back", "cashier's check",
        "cd", "certificate of deposit", "charge-off", "checking account", "closing costs",
        "co-signer", "collateral", "collections", "compound interest", "credit",
        "credit bureau", "credit card", "credit limit", "credit line", "credit report",
        "credit score", "credit union", "currency", "current account", "custodian",
        "debit card", "debt", "debt consolidation", "debt-to-income ratio", "deductible",
        "default", "deferment", "deposit", "depreciation", "direct deposit",
        "dispute", "diversification", "dividend", "down payment", "early withdrawal",
        "earnest money", "eft", "equity", "escrow", "estate",
        "exchange rate", "fafsa", "fdic", "fee schedule", "fico",
        "fiduciary", "finance charge", "financial advisor", "fixed rate", "forbearance",
        "foreclosure", "fraud alert", "funds availability", "garnishment", "grace period",
        "gross income", "hard inquiry", "heloc", "home equity", "homeowners insurance",
        "hsa", "index fund", "inflation", "installment loan", "insufficient funds",
        "insurance", "interest", "interest rate", "investment", "ira",
        "joint account", "late fee", "lease", "lender", "liability",
        "lien", "line of credit", "liquidity", "loan", "loan officer",
        "loan term", "lock rate", "maturity date", "merchant services", "minimum balance",
        "minimum payment", "money market", "money order", "mortgage", "mortgage insurance",
        "mutual fund", "net income", "net worth", "nsf fee", "online banking",
        "origination fee", "overdraft", "overdraft protection", "payee", "payment plan",
        "payoff amount", "payroll", "pending transaction", "personal loan", "pin",
        "pmi", "points", "portfolio", "preapproval", "prepayment penalty",
        "prime rate", "principal", "promissory note", "quarterly statement", "rate lock",
        "refinance", "refund", "remittance", "repayment", "repossession",
        "reserve requirement", "retirement", "returned check", "revolving credit", "roth ira",
        "routing number", "savings account", "savings bond", "secured card", "secured loan",
        "securities", "security deposit", "settlement", "share certificate", "small business loan",
        "soft inquiry", "spending limit", "statement cycle", "statement balance", "stock",
        "stop payment", "student loan", "subprime", "surcharge", "tax lien",
        "tax refund", "term deposit", "title insurance", "transaction fee", "transfer limit",
        "treasury", "trust account", "underwriting", "unsecured loan", "usury",
        "variable rate", "vesting", "wire transfer", "withdrawal", "withdrawal limit",
        "yield", "zelle", "zero balance", "401k", "529 plan",
    };
    return terms;
}

std::vector<std::string> load_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file: " + path.string());
    std::vector<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        std::string term = text::strip(line);
        if (!term.empty() && term[0] != '#') terms.push_back(std::move(term));
    }
    return terms;
}

}  // namespace ragsynth::lexicon
